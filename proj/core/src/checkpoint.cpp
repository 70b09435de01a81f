#include "wnetgan/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"
#include "wnetgan/errors.hpp"

namespace wnetgan::ckpt {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'W', 'N', 'S', '1'};

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}
std::uint32_t read_u32(std::ifstream& in, const std::string& name) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw CorruptionError("truncated checkpoint container " + name);
    return v;
}

void write_string(std::ofstream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string read_string(std::ifstream& in, const std::string& name) {
    const std::uint32_t n = read_u32(in, name);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw CorruptionError("truncated checkpoint container " + name);
    return s;
}

nlohmann::ordered_json gen_spec_to_json(const nets::GeneratorSpec& s) {
    return {{"arch", s.arch},
            {"in_size", s.in_size},
            {"base_width", s.base_width},
            {"n_levels", s.n_levels},
            {"fusion_width", s.fusion_width},
            {"dropout_rate", s.dropout_rate}};
}

nets::GeneratorSpec gen_spec_from_json(const nlohmann::json& j) {
    nets::GeneratorSpec s;
    s.arch = j.at("arch").get<std::string>();
    s.in_size = j.at("in_size").get<int>();
    s.base_width = j.at("base_width").get<int>();
    s.n_levels = j.at("n_levels").get<int>();
    s.fusion_width = j.at("fusion_width").get<int>();
    s.dropout_rate = j.at("dropout_rate").get<float>();
    return s;
}

nlohmann::ordered_json disc_spec_to_json(const nets::DiscriminatorSpec& s) {
    return {{"widths", s.widths}, {"leaky_slope", s.leaky_slope}};
}

nets::DiscriminatorSpec disc_spec_from_json(const nlohmann::json& j) {
    nets::DiscriminatorSpec s;
    s.widths = j.at("widths").get<std::vector<int>>();
    s.leaky_slope = j.at("leaky_slope").get<float>();
    return s;
}

}  // namespace

const nn::Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

void Checkpoint::save(const fs::path& base) const {
    fs::path json_path = base;
    json_path += ".json";
    fs::path wns_path = base;
    wns_path += ".wns";

    nlohmann::ordered_json j;
    j["generator_spec"] = gen_spec_to_json(generator_spec);
    j["discriminator_spec"] = disc_spec_to_json(discriminator_spec);
    j["epoch"] = epoch;
    j["global_step"] = global_step;
    j["optimizer_state"] = wns_path.filename().string();
    j["norm_spec"] = {
        {"height", {{"h_min", height_norm.h_min}, {"h_max", height_norm.h_max}}},
        {"intensity",
         {{"h_min", intensity_norm.h_min}, {"h_max", intensity_norm.h_max}}}};

    {
        std::ofstream out(json_path, std::ios::trunc);
        if (!out) throw IoError("cannot write " + json_path.string());
        out << j.dump(2) << "\n";
    }

    std::ofstream out(wns_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + wns_path.string());
    out.write(kMagic, 4);
    write_u32(out, 1);  // container version
    write_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        write_string(out, name);
        const nn::Shape4 s = t.shape();
        const std::int32_t dims[4] = {s.n, s.c, s.h, s.w};
        out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.numel() * sizeof(float)));
    }
    write_string(out, rng_state);
    const std::int64_t counters[3] = {g_opt_steps, d_opt_steps, global_step};
    out.write(reinterpret_cast<const char*>(counters), sizeof(counters));
    if (!out) throw IoError("short write on " + wns_path.string());
}

Checkpoint Checkpoint::load(const fs::path& path) {
    fs::path json_path = path;
    if (json_path.extension() != ".json") json_path += ".json";

    std::ifstream jin(json_path);
    if (!jin) throw IoError("cannot open checkpoint manifest " + json_path.string());
    nlohmann::json j;
    try {
        jin >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed checkpoint manifest: " + std::string(e.what()));
    }

    Checkpoint c;
    try {
        c.generator_spec = gen_spec_from_json(j.at("generator_spec"));
        c.discriminator_spec = disc_spec_from_json(j.at("discriminator_spec"));
        c.epoch = j.at("epoch").get<int>();
        c.global_step = j.at("global_step").get<std::int64_t>();
        const auto& ns = j.at("norm_spec");
        c.height_norm.h_min = ns.at("height").at("h_min").get<float>();
        c.height_norm.h_max = ns.at("height").at("h_max").get<float>();
        c.intensity_norm.h_min = ns.at("intensity").at("h_min").get<float>();
        c.intensity_norm.h_max = ns.at("intensity").at("h_max").get<float>();
        c.intensity_norm.kind = NormSpec::Kind::intensity;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint manifest missing fields: " + std::string(e.what()));
    }

    const fs::path wns_path =
        json_path.parent_path() / j.at("optimizer_state").get<std::string>();
    std::ifstream in(wns_path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint payload " + wns_path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError(wns_path.string() + ": not a checkpoint container");
    const std::uint32_t version = read_u32(in, wns_path.string());
    if (version != 1)
        throw FormatError(wns_path.string() + ": unsupported container version " +
                          std::to_string(version));
    const std::uint32_t n_tensors = read_u32(in, wns_path.string());
    c.tensors.reserve(n_tensors);
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        std::string name = read_string(in, wns_path.string());
        std::int32_t dims[4];
        in.read(reinterpret_cast<char*>(dims), sizeof(dims));
        if (!in) throw CorruptionError("truncated checkpoint container");
        nn::Tensor t(nn::Shape4{dims[0], dims[1], dims[2], dims[3]});
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(float)));
        if (!in) throw CorruptionError("truncated checkpoint tensor " + name);
        c.tensors.emplace_back(std::move(name), std::move(t));
    }
    c.rng_state = read_string(in, wns_path.string());
    std::int64_t counters[3];
    in.read(reinterpret_cast<char*>(counters), sizeof(counters));
    if (!in) throw CorruptionError("truncated checkpoint trailer");
    c.g_opt_steps = counters[0];
    c.d_opt_steps = counters[1];
    c.global_step = counters[2];
    return c;
}

}  // namespace wnetgan::ckpt
