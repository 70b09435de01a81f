// wnetgan: DSM-refinement pipeline driver.
//
// Subcommands: synth (paired scene generation), train (adversarial training),
// infer (full-raster refinement), eval (masked accuracy metrics), profile
// (height profiles along a line). Exit codes: 0 ok, 1 internal failure,
// 2 usage/input error.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "wnetgan/checkpoint.hpp"
#include "wnetgan/dataset.hpp"
#include "wnetgan/errors.hpp"
#include "wnetgan/image_io.hpp"
#include "wnetgan/metrics.hpp"
#include "wnetgan/raster.hpp"
#include "wnetgan/runtime.hpp"
#include "wnetgan/synth.hpp"
#include "wnetgan/tensor.hpp"
#include "wnetgan/trainer.hpp"

namespace fs = std::filesystem;
using namespace wnetgan;

namespace {

struct GlobalOpts {
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
};

class ManifestWriter {
public:
    ManifestWriter(std::string command, int argc, char** argv)
        : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {
        for (int i = 0; i < argc; ++i) argv_.emplace_back(argv[i]);
    }

    void add_input(const fs::path& p) { inputs_.push_back(p.string()); }
    void add_output(const fs::path& p) { outputs_.push_back(p.string()); }
    void set_config(nlohmann::ordered_json cfg) { config_ = std::move(cfg); }
    void set_seed(std::uint64_t s) { seed_ = s; }

    void write(const fs::path& dir) const {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        nlohmann::ordered_json j;
        j["command"] = command_;
        j["argv"] = argv_;
        j["config"] = config_;
        j["seed"] = seed_;
        j["inputs"] = inputs_;
        j["outputs"] = outputs_;
        j["version"] = std::string("wnetgan-") + version();
        j["duration_s"] = secs;
        fs::create_directories(dir);
        atomic_write_text(dir / "run_manifest.json", j.dump(2) + "\n");
    }

private:
    std::string command_;
    std::vector<std::string> argv_;
    nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
    std::uint64_t seed_ = 0;
    std::vector<std::string> inputs_, outputs_;
    std::chrono::steady_clock::time_point start_;
};

int cmd_synth(const GlobalOpts& g, const fs::path& spec_path, const fs::path& out_dir,
              std::optional<int> count, ManifestWriter& manifest) {
    synth::DatasetSpec spec = synth::DatasetSpec::from_json_file(spec_path);
    if (count) spec.count = *count;
    if (g.seed) {
        spec.scene.seed = *g.seed;
        spec.degrade.seed = *g.seed + 0x9e3779b9u;
    }
    manifest.add_input(spec_path);
    manifest.set_seed(spec.scene.seed);
    manifest.set_config(nlohmann::ordered_json::parse(spec.to_json_text()));

    const data::DatasetManifest ds = synth::build_dataset(spec, out_dir);
    manifest.add_output(out_dir / "dataset.json");
    std::cout << "wrote " << ds.scenes.size() << " scenes to " << out_dir.string()
              << " (train/val/test = " << ds.train_ids.size() << "/" << ds.val_ids.size()
              << "/" << ds.test_ids.size() << ")\n";
    manifest.write(out_dir);
    return 0;
}

int cmd_train(const GlobalOpts& g, train::TrainConfig config, const fs::path& dataset,
              const fs::path& out_dir, const std::optional<fs::path>& resume_from,
              ManifestWriter& manifest) {
    if (g.seed) config.seed = *g.seed;
    if (g.deterministic) config.deterministic = true;
    if (!fs::exists(dataset)) throw IoError("no such dataset manifest: " + dataset.string());

    manifest.add_input(dataset);
    manifest.set_seed(config.seed);
    manifest.set_config(nlohmann::ordered_json::parse(config.to_json_text()));

    const train::TrainResult result =
        resume_from ? train::resume(*resume_from, config, dataset, out_dir)
                    : train::train(config, dataset, out_dir);
    manifest.add_output(result.final_checkpoint);
    manifest.add_output(result.log_path);
    std::cout << "trained " << result.epochs_run << " epoch(s), " << result.steps_run
              << " step(s); val L1 " << result.initial_val_l1 << " -> "
              << result.final_val_l1 << "\n"
              << "final checkpoint: " << result.final_checkpoint.string() << "\n";
    manifest.write(out_dir);
    return 0;
}

int cmd_infer(const fs::path& checkpoint, const fs::path& dsm_path,
              const fs::path& pan_path, const fs::path& out_path,
              std::optional<fs::path> preview_path, ManifestWriter& manifest) {
    manifest.add_input(checkpoint);
    manifest.add_input(dsm_path);
    manifest.add_input(pan_path);

    const RasterGrid dsm = load_raster(dsm_path);
    const RasterGrid pan = load_raster(pan_path);
    const train::InferResult result = train::infer(checkpoint, dsm, pan);

    write_raster(result.refined, out_path);
    fs::path valid_path = out_path;
    valid_path.replace_extension();
    valid_path += "_valid.r32";
    write_raster(result.validity, valid_path);

    fs::path png = preview_path.value_or([&] {
        fs::path p = out_path;
        p.replace_extension();
        p += "_preview.png";
        return p;
    }());
    img::write_preview_png(result.refined, png);

    manifest.add_output(out_path);
    manifest.add_output(valid_path);
    manifest.add_output(png);
    std::cout << "refined " << dsm.rows() << "x" << dsm.cols() << " raster -> "
              << out_path.string() << " (preview " << png.string() << ")\n";
    if (result.clamped_pixels > 0)
        std::cout << "note: " << result.clamped_pixels
                  << " generator outputs fell outside [-1,1] and were clamped\n";
    manifest.write(out_path.parent_path().empty() ? fs::path(".")
                                                  : out_path.parent_path());
    return 0;
}

int cmd_eval(const fs::path& pred_path, const fs::path& gt_path, const fs::path& mask_path,
             int dilation, std::optional<fs::path> json_path, const std::string& label,
             ManifestWriter& manifest) {
    manifest.add_input(pred_path);
    manifest.add_input(gt_path);
    manifest.add_input(mask_path);

    const RasterGrid pred = load_raster(pred_path);
    const RasterGrid gt = load_raster(gt_path);
    const RasterGrid mask = load_raster(mask_path);
    const metrics::MetricsReport report = metrics::evaluate(pred, gt, mask, dilation);

    std::cout << metrics::format_table({{label, report}});
    fs::path jp = json_path.value_or([&] {
        fs::path p = pred_path;
        p.replace_extension();
        p += "_metrics.json";
        return p;
    }());
    atomic_write_text(jp, report.to_json() + "\n");
    manifest.add_output(jp);
    manifest.write(jp.parent_path().empty() ? fs::path(".") : jp.parent_path());
    return 0;
}

metrics::ProfileLine parse_line_flag(const std::string& text, int samples) {
    metrics::ProfileLine line;
    line.samples = samples;
    const int n = std::sscanf(text.c_str(), "%lf,%lf,%lf,%lf", &line.x0, &line.y0,
                              &line.x1, &line.y1);
    if (n != 4)
        throw ParameterError("--line expects x0,y0,x1,y1 (pixel coordinates), got '" +
                             text + "'");
    return line;
}

int cmd_profile(const std::vector<fs::path>& rasters, const std::string& line_text,
                int samples, const fs::path& out_dir, ManifestWriter& manifest) {
    const metrics::ProfileLine line = parse_line_flag(line_text, samples);
    fs::create_directories(out_dir);
    for (const auto& path : rasters) {
        manifest.add_input(path);
        const RasterGrid raster = load_raster(path);
        const auto profile = metrics::extract_profile(raster, line);
        fs::path csv = out_dir / (path.stem().string() + "_profile.csv");
        std::string text = "distance_m,height_m\n";
        char buf[64];
        for (const auto& [d, h] : profile) {
            std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", d, h);
            text += buf;
        }
        atomic_write_text(csv, text);
        manifest.add_output(csv);
        std::cout << "wrote " << profile.size() << " samples to " << csv.string() << "\n";
    }
    manifest.write(out_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"WNet-cGAN DSM refinement pipeline"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags are accepted after the subcommand too

    GlobalOpts global;
    app.add_option("--seed", global.seed, "Override the configured RNG seed");
    app.add_flag("--deterministic", global.deterministic,
                 "Single-threaded bitwise-reproducible mode");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a paired synthetic dataset");
    fs::path synth_spec, synth_out;
    std::optional<int> synth_count;
    synth_cmd->add_option("spec", synth_spec, "Dataset spec JSON")->required();
    synth_cmd->add_option("out_dir", synth_out, "Output directory")->required();
    synth_cmd->add_option("--count", synth_count, "Number of scenes (overrides spec)");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the refinement network");
    fs::path train_config_path, train_dataset, train_out;
    std::optional<fs::path> train_resume;
    train_cmd->add_option("config", train_config_path,
                          "Train config JSON ('-' for built-in defaults)")
        ->required();
    train_cmd->add_option("dataset", train_dataset, "dataset.json manifest")->required();
    train_cmd->add_option("out_dir", train_out, "Output directory")->required();
    train_cmd->add_option("--resume", train_resume, "Checkpoint manifest to resume from");
    int f_epochs = 0, f_batch = 0, f_ckpt_every = 0, f_patch = 0, f_base_width = 0,
        f_n_levels = 0, f_fusion_width = 0;
    double f_lr = 0, f_beta1 = 0, f_beta2 = 0, f_lambda = 0, f_dropout = 0;
    std::string f_model;
    bool f_no_augment = false;
    auto* o_epochs = train_cmd->add_option("--epochs", f_epochs, "Total epochs");
    auto* o_batch = train_cmd->add_option("--batch-size", f_batch, "Minibatch size");
    auto* o_lr = train_cmd->add_option("--lr", f_lr, "ADAM learning rate alpha");
    auto* o_beta1 = train_cmd->add_option("--beta1", f_beta1, "ADAM beta1");
    auto* o_beta2 = train_cmd->add_option("--beta2", f_beta2, "ADAM beta2");
    auto* o_lambda = train_cmd->add_option("--lambda-l1", f_lambda, "L1 weight");
    auto* o_ckpt = train_cmd->add_option("--checkpoint-every", f_ckpt_every,
                                         "Checkpoint period in epochs");
    auto* o_patch = train_cmd->add_option("--patch-size", f_patch, "Training patch size");
    auto* o_model =
        train_cmd->add_option("--model", f_model, "Generator arch: wnet | unet_dsm");
    auto* o_bw = train_cmd->add_option("--base-width", f_base_width, "UNet base width");
    auto* o_nl = train_cmd->add_option("--n-levels", f_n_levels, "UNet depth");
    auto* o_fw = train_cmd->add_option("--fusion-width", f_fusion_width, "Fusion conv width");
    auto* o_do = train_cmd->add_option("--dropout-rate", f_dropout, "Decoder dropout rate");
    train_cmd->add_flag("--no-augment", f_no_augment, "Disable crops/flips");

    // infer
    auto* infer_cmd = app.add_subcommand("infer", "Refine a DSM with a trained checkpoint");
    fs::path infer_ckpt, infer_dsm, infer_pan, infer_out;
    std::optional<fs::path> infer_preview;
    infer_cmd->add_option("checkpoint", infer_ckpt, "Checkpoint manifest (.json)")->required();
    infer_cmd->add_option("dsm", infer_dsm, "Stereo DSM raster")->required();
    infer_cmd->add_option("pan", infer_pan, "PAN raster")->required();
    infer_cmd->add_option("out", infer_out, "Output raster path (.r32)")->required();
    infer_cmd->add_option("--preview", infer_preview, "Preview PNG path");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Masked accuracy metrics");
    fs::path eval_pred, eval_gt, eval_mask;
    std::optional<fs::path> eval_json;
    int eval_dilation = 3;
    std::string eval_label = "prediction";
    eval_cmd->add_option("pred", eval_pred, "Predicted DSM")->required();
    eval_cmd->add_option("gt", eval_gt, "Ground-truth DSM")->required();
    eval_cmd->add_option("mask", eval_mask, "Building footprint mask")->required();
    eval_cmd->add_option("--dilation", eval_dilation, "Footprint dilation radius, px");
    eval_cmd->add_option("--json", eval_json, "Metrics JSON output path");
    eval_cmd->add_option("--label", eval_label, "Row label for the table");

    // profile
    auto* profile_cmd = app.add_subcommand("profile", "Height profiles along a line");
    std::vector<fs::path> profile_rasters;
    std::string profile_line;
    int profile_samples = 64;
    fs::path profile_out = ".";
    profile_cmd->add_option("rasters", profile_rasters, "Input rasters")->required();
    profile_cmd->add_option("--line", profile_line, "x0,y0,x1,y1 in pixel coordinates")
        ->required();
    profile_cmd->add_option("--samples", profile_samples, "Sample count along the line");
    profile_cmd->add_option("--out-dir", profile_out, "Directory for CSV output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (global.deterministic) nn::set_max_threads(1);

    try {
        if (synth_cmd->parsed()) {
            ManifestWriter manifest("synth", argc, argv);
            return cmd_synth(global, synth_spec, synth_out, synth_count, manifest);
        }
        if (train_cmd->parsed()) {
            train::TrainConfig config;
            if (train_config_path != "-")
                config = train::TrainConfig::from_json_file(train_config_path);
            if (o_epochs->count()) config.epochs = f_epochs;
            if (o_batch->count()) config.batch_size = f_batch;
            if (o_lr->count()) config.lr_alpha = f_lr;
            if (o_beta1->count()) config.adam_beta1 = f_beta1;
            if (o_beta2->count()) config.adam_beta2 = f_beta2;
            if (o_lambda->count()) config.lambda_l1 = f_lambda;
            if (o_ckpt->count()) config.checkpoint_every = f_ckpt_every;
            if (o_patch->count()) {
                config.patch_size = f_patch;
                config.generator.in_size = f_patch;
            }
            if (o_model->count()) config.generator.arch = f_model;
            if (o_bw->count()) config.generator.base_width = f_base_width;
            if (o_nl->count()) config.generator.n_levels = f_n_levels;
            if (o_fw->count()) config.generator.fusion_width = f_fusion_width;
            if (o_do->count())
                config.generator.dropout_rate = static_cast<float>(f_dropout);
            if (f_no_augment) config.augment = false;
            ManifestWriter manifest("train", argc, argv);
            return cmd_train(global, config, train_dataset, train_out, train_resume,
                             manifest);
        }
        if (infer_cmd->parsed()) {
            ManifestWriter manifest("infer", argc, argv);
            return cmd_infer(infer_ckpt, infer_dsm, infer_pan, infer_out, infer_preview,
                             manifest);
        }
        if (eval_cmd->parsed()) {
            ManifestWriter manifest("eval", argc, argv);
            return cmd_eval(eval_pred, eval_gt, eval_mask, eval_dilation, eval_json,
                            eval_label, manifest);
        }
        if (profile_cmd->parsed()) {
            ManifestWriter manifest("profile", argc, argv);
            return cmd_profile(profile_rasters, profile_line, profile_samples, profile_out,
                               manifest);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
