#include "wnetgan/dataset.hpp"

#include <fstream>

#include "json.hpp"
#include "wnetgan/errors.hpp"

namespace wnetgan::data {

namespace fs = std::filesystem;

const ScenePaths& DatasetManifest::scene(int id) const {
    for (const auto& s : scenes)
        if (s.id == id) return s;
    throw InputError("dataset manifest has no scene with id " + std::to_string(id));
}

DatasetManifest DatasetManifest::load(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open dataset manifest " + manifest_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed dataset manifest: " + std::string(e.what()));
    }

    DatasetManifest m;
    m.root = manifest_path.parent_path();
    try {
        m.gsd_m = j.at("gsd_m").get<float>();
        const auto& ns = j.at("norm_spec");
        m.height_norm.h_min = ns.at("height").at("h_min").get<float>();
        m.height_norm.h_max = ns.at("height").at("h_max").get<float>();
        m.height_norm.kind = NormSpec::Kind::height;
        m.intensity_norm.h_min = ns.at("intensity").at("h_min").get<float>();
        m.intensity_norm.h_max = ns.at("intensity").at("h_max").get<float>();
        m.intensity_norm.kind = NormSpec::Kind::intensity;
        const auto& splits = j.at("splits");
        m.train_ids = splits.at("train").get<std::vector<int>>();
        m.val_ids = splits.at("val").get<std::vector<int>>();
        m.test_ids = splits.at("test").get<std::vector<int>>();
        for (const auto& s : j.at("scenes")) {
            ScenePaths p;
            p.id = s.at("id").get<int>();
            p.gt = s.at("gt").get<std::string>();
            p.stereo = s.at("stereo").get<std::string>();
            p.pan = s.at("pan").get<std::string>();
            p.mask = s.at("mask").get<std::string>();
            p.n_buildings = s.value("n_buildings", -1);
            m.scenes.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("dataset manifest missing fields: " + std::string(e.what()));
    }
    m.height_norm.validate();
    m.intensity_norm.validate();
    return m;
}

void DatasetManifest::save(const fs::path& manifest_path) const {
    nlohmann::ordered_json j;
    j["gsd_m"] = gsd_m;
    j["norm_spec"] = {
        {"height", {{"h_min", height_norm.h_min}, {"h_max", height_norm.h_max}}},
        {"intensity",
         {{"h_min", intensity_norm.h_min}, {"h_max", intensity_norm.h_max}}}};
    j["splits"] = {{"train", train_ids}, {"val", val_ids}, {"test", test_ids}};
    j["scenes"] = nlohmann::ordered_json::array();
    for (const auto& s : scenes) {
        j["scenes"].push_back({{"id", s.id},
                               {"gt", s.gt},
                               {"stereo", s.stereo},
                               {"pan", s.pan},
                               {"mask", s.mask},
                               {"n_buildings", s.n_buildings}});
    }
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw IoError("cannot write dataset manifest " + manifest_path.string());
    out << j.dump(2) << "\n";
}

SceneRasters load_scene(const DatasetManifest& manifest, int id) {
    const ScenePaths& p = manifest.scene(id);
    SceneRasters s;
    s.gt = load_raster(manifest.root / p.gt);
    s.stereo = load_raster(manifest.root / p.stereo);
    s.pan = load_raster(manifest.root / p.pan);
    s.mask = load_raster(manifest.root / p.mask);
    if (s.gt.rows() != s.stereo.rows() || s.gt.cols() != s.stereo.cols() ||
        s.gt.rows() != s.pan.rows() || s.gt.cols() != s.pan.cols() ||
        s.gt.rows() != s.mask.rows() || s.gt.cols() != s.mask.cols())
        throw InputError("scene " + std::to_string(id) + " rasters are not co-registered");
    return s;
}

PatchSample make_patch(const SceneRasters& scene, const DatasetManifest& manifest,
                       int patch_size, int row_off, int col_off, bool hflip) {
    const int rows = scene.gt.rows(), cols = scene.gt.cols();
    if (patch_size > rows || patch_size > cols)
        throw InputError("patch_size " + std::to_string(patch_size) +
                         " exceeds scene size " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    if (row_off < 0 || col_off < 0 || row_off + patch_size > rows ||
        col_off + patch_size > cols)
        throw ParameterError("patch crop offset outside scene");

    const nn::Shape4 shape{1, 1, patch_size, patch_size};
    PatchSample out{nn::Tensor(shape), nn::Tensor(shape), nn::Tensor(shape),
                    nn::Tensor(shape)};

    const double h_span = static_cast<double>(manifest.height_norm.h_max) -
                          manifest.height_norm.h_min;
    const double i_span = static_cast<double>(manifest.intensity_norm.h_max) -
                          manifest.intensity_norm.h_min;
    auto norm_height = [&](float v) {
        const double t =
            2.0 * (static_cast<double>(v) - manifest.height_norm.h_min) / h_span - 1.0;
        return static_cast<float>(std::clamp(t, -1.0, 1.0));
    };
    auto norm_intensity = [&](float v) {
        const double t =
            2.0 * (static_cast<double>(v) - manifest.intensity_norm.h_min) / i_span - 1.0;
        return static_cast<float>(std::clamp(t, -1.0, 1.0));
    };

    for (int r = 0; r < patch_size; ++r) {
        for (int c = 0; c < patch_size; ++c) {
            const int sr = row_off + r;
            const int sc = col_off + (hflip ? patch_size - 1 - c : c);
            const float sv = scene.stereo.at(sr, sc);
            const float gv = scene.gt.at(sr, sc);
            const bool stereo_nodata = scene.stereo.is_nodata(sv);
            const bool gt_nodata = scene.gt.is_nodata(gv);
            out.stereo.at(0, 0, r, c) = stereo_nodata ? -1.0f : norm_height(sv);
            out.gt.at(0, 0, r, c) = gt_nodata ? -1.0f : norm_height(gv);
            out.pan.at(0, 0, r, c) = norm_intensity(scene.pan.at(sr, sc));
            out.valid.at(0, 0, r, c) = (stereo_nodata || gt_nodata) ? 0.0f : 1.0f;
        }
    }
    return out;
}

Batch stack_batch(const std::vector<PatchSample>& samples) {
    if (samples.empty()) throw ParameterError("cannot stack an empty batch");
    const nn::Shape4 s0 = samples[0].stereo.shape();
    const nn::Shape4 shape{static_cast<int>(samples.size()), 1, s0.h, s0.w};
    Batch b{nn::Tensor(shape), nn::Tensor(shape), nn::Tensor(shape), nn::Tensor(shape)};
    const std::size_t plane = static_cast<std::size_t>(s0.h) * s0.w;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i].stereo.shape() == s0))
            throw ParameterError("batch samples differ in shape");
        auto copy_into = [&](nn::Tensor& dst, const nn::Tensor& src) {
            std::copy(src.vec().begin(), src.vec().end(),
                      dst.vec().begin() + i * plane);
        };
        copy_into(b.stereo, samples[i].stereo);
        copy_into(b.pan, samples[i].pan);
        copy_into(b.gt, samples[i].gt);
        copy_into(b.valid, samples[i].valid);
    }
    return b;
}

}  // namespace wnetgan::data
