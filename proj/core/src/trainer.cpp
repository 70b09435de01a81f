#include "wnetgan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "wnetgan/checkpoint.hpp"
#include "wnetgan/errors.hpp"
#include "wnetgan/optim.hpp"
#include "wnetgan/rng.hpp"

namespace wnetgan::train {

namespace fs = std::filesystem;
using nn::Tensor;
using nn::Var;

// ---------------------------------------------------------------------------
// TrainConfig
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    if (epochs < 0) throw ParameterError("epochs must be >= 0");
    if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
    if (!(lr_alpha > 0.0)) throw ParameterError("lr_alpha must be > 0");
    if (adam_beta1 <= 0.0 || adam_beta1 >= 1.0 || adam_beta2 <= 0.0 || adam_beta2 >= 1.0)
        throw ParameterError("adam betas must lie in (0, 1)");
    if (lambda_l1 < 0.0) throw ParameterError("lambda_l1 must be >= 0");
    if (checkpoint_every < 1) throw ParameterError("checkpoint_every must be >= 1");
    if (patch_size < 1) throw ParameterError("patch_size must be >= 1");
    if (generator.in_size != patch_size)
        throw ParameterError("generator in_size must equal patch_size");
    generator.validate();
    discriminator.validate();
}

namespace {

nlohmann::ordered_json config_to_json(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["lr_alpha"] = c.lr_alpha;
    j["adam_beta1"] = c.adam_beta1;
    j["adam_beta2"] = c.adam_beta2;
    j["lambda_l1"] = c.lambda_l1;
    j["seed"] = c.seed;
    j["checkpoint_every"] = c.checkpoint_every;
    j["patch_size"] = c.patch_size;
    j["deterministic"] = c.deterministic;
    j["augment"] = c.augment;
    j["model"] = c.generator.arch;
    j["base_width"] = c.generator.base_width;
    j["n_levels"] = c.generator.n_levels;
    j["fusion_width"] = c.generator.fusion_width;
    j["dropout_rate"] = c.generator.dropout_rate;
    j["d_widths"] = c.discriminator.widths;
    j["d_leaky_slope"] = c.discriminator.leaky_slope;
    return j;
}

}  // namespace

TrainConfig TrainConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed train config: " + std::string(e.what()));
    }
    TrainConfig c;
    const nlohmann::json defaults = config_to_json(c);
    for (const auto& [key, value] : j.items()) {
        if (!defaults.contains(key))
            throw FormatError("unknown train config key '" + key + "'");
        (void)value;
    }
    auto get_or = [&](const char* key, auto fallback) {
        using T = decltype(fallback);
        return j.contains(key) ? j.at(key).get<T>() : fallback;
    };
    c.epochs = get_or("epochs", c.epochs);
    c.batch_size = get_or("batch_size", c.batch_size);
    c.lr_alpha = get_or("lr_alpha", c.lr_alpha);
    c.adam_beta1 = get_or("adam_beta1", c.adam_beta1);
    c.adam_beta2 = get_or("adam_beta2", c.adam_beta2);
    c.lambda_l1 = get_or("lambda_l1", c.lambda_l1);
    c.seed = get_or("seed", c.seed);
    c.checkpoint_every = get_or("checkpoint_every", c.checkpoint_every);
    c.patch_size = get_or("patch_size", c.patch_size);
    c.deterministic = get_or("deterministic", c.deterministic);
    c.augment = get_or("augment", c.augment);
    c.generator.arch = get_or("model", c.generator.arch);
    c.generator.base_width = get_or("base_width", c.generator.base_width);
    c.generator.n_levels = get_or("n_levels", c.generator.n_levels);
    c.generator.fusion_width = get_or("fusion_width", c.generator.fusion_width);
    c.generator.dropout_rate = get_or("dropout_rate", c.generator.dropout_rate);
    c.generator.in_size = c.patch_size;
    c.discriminator.widths = get_or("d_widths", c.discriminator.widths);
    c.discriminator.leaky_slope = get_or("d_leaky_slope", c.discriminator.leaky_slope);
    return c;
}

TrainConfig TrainConfig::from_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open train config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::string TrainConfig::to_json_text() const { return config_to_json(*this).dump(2); }

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

namespace {

struct LoadedScene {
    int id;
    data::SceneRasters rasters;
};

class Trainer {
public:
    Trainer(const TrainConfig& config, const fs::path& dataset_manifest,
            const fs::path& out_dir)
        : config_(config), out_dir_(out_dir), rng_(config.seed) {
        config_.validate();
        if (config_.deterministic) nn::set_max_threads(1);
        fs::create_directories(out_dir_);
        manifest_ = data::DatasetManifest::load(dataset_manifest);
        load_split(manifest_.train_ids, train_scenes_);
        load_split(manifest_.val_ids, val_scenes_);

        // Construction consumes the RNG stream in a fixed order: generator
        // first, then discriminator.
        generator_ = nets::build_generator(config_.generator, rng_);
        discriminator_ = nets::build_discriminator(config_.discriminator, rng_);
        generator_->collect(g_params_);
        discriminator_->collect(d_params_);
        generator_->collect_buffers(g_buffers_);
        discriminator_->collect_buffers(d_buffers_);

        auto vars = [](const nets::ParamList& l) {
            std::vector<Var> v;
            v.reserve(l.params.size());
            for (const auto& [name, p] : l.params) v.push_back(p);
            return v;
        };
        g_opt_ = nn::AdamOptimizer(vars(g_params_), static_cast<float>(config_.lr_alpha),
                                   static_cast<float>(config_.adam_beta1),
                                   static_cast<float>(config_.adam_beta2));
        d_opt_ = nn::AdamOptimizer(vars(d_params_), static_cast<float>(config_.lr_alpha),
                                   static_cast<float>(config_.adam_beta1),
                                   static_cast<float>(config_.adam_beta2));
        weights_.lambda_l1 = static_cast<float>(config_.lambda_l1);
    }

    void restore(const ckpt::Checkpoint& c) {
        if (!(c.generator_spec == generator_->spec()))
            throw CompatibilityError("checkpoint generator spec does not match configuration");
        if (!(c.discriminator_spec == discriminator_->spec()))
            throw CompatibilityError("checkpoint discriminator spec does not match configuration");
        auto restore_list = [&](const nets::ParamList& params) {
            for (const auto& [name, p] : params.params) {
                const Tensor* t = c.find(name);
                if (!t) throw CompatibilityError("checkpoint is missing tensor " + name);
                if (!(t->shape() == p->value.shape()))
                    throw CompatibilityError("checkpoint tensor " + name + " has shape " +
                                             t->shape().str() + ", expected " +
                                             p->value.shape().str());
                p->value = *t;
            }
        };
        restore_list(g_params_);
        restore_list(d_params_);
        auto restore_buffers = [&](const nets::BufferList& buffers) {
            for (const auto& [name, buf] : buffers.buffers) {
                const Tensor* t = c.find(name);
                if (!t) throw CompatibilityError("checkpoint is missing buffer " + name);
                *buf = *t;
            }
        };
        restore_buffers(g_buffers_);
        restore_buffers(d_buffers_);
        auto restore_moments = [&](nn::AdamOptimizer& opt, const nets::ParamList& params,
                                   const char* prefix, std::int64_t steps) {
            for (std::size_t i = 0; i < params.params.size(); ++i) {
                const Tensor* m = c.find(std::string(prefix) + ".m." + params.params[i].first);
                const Tensor* v = c.find(std::string(prefix) + ".v." + params.params[i].first);
                if (!m || !v)
                    throw CompatibilityError("checkpoint is missing optimizer moments for " +
                                             params.params[i].first);
                opt.moment1(i) = *m;
                opt.moment2(i) = *v;
            }
            opt.set_step_count(steps);
        };
        restore_moments(g_opt_, g_params_, "opt.g", c.g_opt_steps);
        restore_moments(d_opt_, d_params_, "opt.d", c.d_opt_steps);
        rng_.restore_state(c.rng_state);
        epoch_ = c.epoch;
        global_step_ = c.global_step;
    }

    ckpt::Checkpoint snapshot() {
        ckpt::Checkpoint c;
        c.generator_spec = generator_->spec();
        c.discriminator_spec = discriminator_->spec();
        c.epoch = epoch_;
        c.global_step = global_step_;
        c.g_opt_steps = g_opt_.step_count();
        c.d_opt_steps = d_opt_.step_count();
        c.height_norm = manifest_.height_norm;
        c.intensity_norm = manifest_.intensity_norm;
        c.rng_state = rng_.save_state();
        for (const auto& [name, p] : g_params_.params) c.tensors.emplace_back(name, p->value);
        for (const auto& [name, p] : d_params_.params) c.tensors.emplace_back(name, p->value);
        for (const auto& [name, b] : g_buffers_.buffers) c.tensors.emplace_back(name, *b);
        for (const auto& [name, b] : d_buffers_.buffers) c.tensors.emplace_back(name, *b);
        auto snap_moments = [&](nn::AdamOptimizer& opt, const nets::ParamList& params,
                                const char* prefix) {
            for (std::size_t i = 0; i < params.params.size(); ++i) {
                c.tensors.emplace_back(std::string(prefix) + ".m." + params.params[i].first,
                                       opt.moment1(i));
                c.tensors.emplace_back(std::string(prefix) + ".v." + params.params[i].first,
                                       opt.moment2(i));
            }
        };
        snap_moments(g_opt_, g_params_, "opt.g");
        snap_moments(d_opt_, d_params_, "opt.d");
        return c;
    }

    TrainResult run() {
        TrainResult result;
        result.log_path = out_dir_ / "train_log.ndjson";
        log_.open(result.log_path, epoch_ == 0 ? std::ios::trunc : std::ios::app);
        if (!log_) throw IoError("cannot write " + result.log_path.string());

        result.initial_val_l1 = validation_l1();
        log_epoch_record(epoch_, result.initial_val_l1);

        const int first_epoch = epoch_ + 1;
        for (int e = first_epoch; e <= config_.epochs; ++e) {
            run_epoch(e);
            epoch_ = e;
            result.epochs_run++;
            const double val = validation_l1();
            log_epoch_record(e, val);
            result.final_val_l1 = val;
            if (e % config_.checkpoint_every == 0 && e != config_.epochs)
                write_checkpoint(e);
        }
        if (epoch_ == first_epoch - 1) {
            // zero remaining epochs: report current state
            result.final_val_l1 = result.initial_val_l1;
        }
        result.final_checkpoint = write_checkpoint(epoch_);
        result.steps_run = steps_run_;
        log_.close();
        return result;
    }

private:
    void load_split(const std::vector<int>& ids, std::vector<LoadedScene>& out) {
        out.reserve(ids.size());
        for (int id : ids) out.push_back({id, data::load_scene(manifest_, id)});
    }

    data::PatchSample sample_patch(const LoadedScene& scene, bool training_draw) {
        const int rows = scene.rasters.gt.rows(), cols = scene.rasters.gt.cols();
        int row_off = (rows - config_.patch_size) / 2;
        int col_off = (cols - config_.patch_size) / 2;
        bool flip = false;
        if (training_draw && config_.augment) {
            row_off = rng_.uniform_int(0, rows - config_.patch_size);
            col_off = rng_.uniform_int(0, cols - config_.patch_size);
            flip = rng_.uniform() < 0.5;
        }
        return data::make_patch(scene.rasters, manifest_, config_.patch_size, row_off,
                                col_off, flip);
    }

    void run_epoch(int epoch) {
        std::vector<std::size_t> order(train_scenes_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng_.shuffle(order);

        for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config_.batch_size));
            std::vector<data::PatchSample> samples;
            samples.reserve(end - start);
            for (std::size_t i = start; i < end; ++i)
                samples.push_back(sample_patch(train_scenes_[order[i]], true));
            const data::Batch batch = data::stack_batch(samples);
            train_step(epoch, batch);
        }
    }

    void train_step(int epoch, const data::Batch& batch) {
        Var stereo = nn::constant(batch.stereo, "batch.stereo");
        Var pan = nn::constant(batch.pan, "batch.pan");
        Var gt = nn::constant(batch.gt, "batch.gt");

        // One generator forward per batch; the same graph feeds both updates.
        Var fake = generator_->forward(stereo, pan, /*training=*/true, &rng_);

        // --- discriminator step (generated samples detached) ---
        d_opt_.zero_grad();
        Var d_real = discriminator_->forward(stereo, gt, /*training=*/true);
        Var d_fake_detached =
            discriminator_->forward(stereo, nn::detach(fake), /*training=*/true);
        Var loss_d = objective::d_loss_node(d_real, d_fake_detached, weights_);
        nn::backward(loss_d);
        d_opt_.step();

        // --- generator step (discriminator weights frozen) ---
        g_opt_.zero_grad();
        nn::set_requires_grad(d_params_, false);
        Var d_fake = discriminator_->forward(stereo, fake, /*training=*/true);
        Var adv = objective::g_adv_loss_node(d_fake, weights_);
        Var l1 = objective::l1_loss_node(fake, gt, &batch.valid);
        Var loss_g = nn::add_scalars(adv, nn::scale_scalar(l1, weights_.lambda_l1));
        nn::backward(loss_g);
        nn::set_requires_grad(d_params_, true);
        g_opt_.step();

        ++global_step_;
        ++steps_run_;
        const double dl = loss_d->value.item();
        const double ga = adv->value.item();
        const double gl = l1->value.item();
        const double gt_total = loss_g->value.item();
        if (!std::isfinite(dl) || !std::isfinite(gt_total)) {
            dump_diagnostic(batch);
            throw InternalError("non-finite loss at step " + std::to_string(global_step_) +
                                " (diagnostic snapshot written to " + out_dir_.string() + ")");
        }
        nlohmann::ordered_json rec;
        rec["step"] = global_step_;
        rec["epoch"] = epoch;
        rec["d_loss"] = dl;
        rec["g_adv"] = ga;
        rec["g_l1"] = gl;
        rec["g_total"] = gt_total;
        log_ << rec.dump() << "\n";
        log_.flush();
    }

    double validation_l1() {
        if (val_scenes_.empty()) return 0.0;
        double acc = 0.0;
        for (const auto& scene : val_scenes_) {
            const data::PatchSample s = sample_patch(scene, false);
            Var fake = generator_->forward(nn::constant(s.stereo), nn::constant(s.pan),
                                           /*training=*/false, nullptr);
            acc += objective::l1_loss(fake->value, s.gt, &s.valid);
        }
        return acc / static_cast<double>(val_scenes_.size());
    }

    void log_epoch_record(int epoch, double val_l1) {
        nlohmann::ordered_json rec;
        rec["epoch"] = epoch;
        rec["val_l1"] = val_l1;
        log_ << rec.dump() << "\n";
        log_.flush();
    }

    fs::path write_checkpoint(int epoch) {
        char name[48];
        std::snprintf(name, sizeof(name), "ckpt_epoch_%04d", epoch);
        const fs::path base = out_dir_ / name;
        snapshot().save(base);
        fs::path json_path = base;
        json_path += ".json";
        return json_path;
    }

    void dump_diagnostic(const data::Batch& batch) {
        ckpt::Checkpoint diag;
        diag.generator_spec = generator_->spec();
        diag.discriminator_spec = discriminator_->spec();
        diag.epoch = epoch_;
        diag.global_step = global_step_;
        diag.height_norm = manifest_.height_norm;
        diag.intensity_norm = manifest_.intensity_norm;
        diag.rng_state = rng_.save_state();
        diag.tensors.emplace_back("batch.stereo", batch.stereo);
        diag.tensors.emplace_back("batch.pan", batch.pan);
        diag.tensors.emplace_back("batch.gt", batch.gt);
        diag.tensors.emplace_back("batch.valid", batch.valid);
        diag.save(out_dir_ / ("diagnostic_step_" + std::to_string(global_step_)));
    }

    TrainConfig config_;
    fs::path out_dir_;
    RandomSource rng_;
    data::DatasetManifest manifest_;
    std::vector<LoadedScene> train_scenes_, val_scenes_;
    std::unique_ptr<nets::Generator> generator_;
    std::unique_ptr<nets::PatchDiscriminator> discriminator_;
    nets::ParamList g_params_, d_params_;
    nets::BufferList g_buffers_, d_buffers_;
    nn::AdamOptimizer g_opt_, d_opt_;
    objective::LossWeights weights_;
    std::ofstream log_;
    int epoch_ = 0;
    std::int64_t global_step_ = 0;
    int steps_run_ = 0;
};

}  // namespace

TrainResult train(const TrainConfig& config, const fs::path& dataset_manifest,
                  const fs::path& out_dir) {
    Trainer trainer(config, dataset_manifest, out_dir);
    return trainer.run();
}

TrainResult resume(const fs::path& checkpoint, const TrainConfig& config,
                   const fs::path& dataset_manifest, const fs::path& out_dir) {
    const ckpt::Checkpoint c = ckpt::Checkpoint::load(checkpoint);
    Trainer trainer(config, dataset_manifest, out_dir);
    trainer.restore(c);
    return trainer.run();
}

// ---------------------------------------------------------------------------
// inference
// ---------------------------------------------------------------------------

InferResult infer(const fs::path& checkpoint, const RasterGrid& dsm,
                  const RasterGrid& pan) {
    if (dsm.rows() != pan.rows() || dsm.cols() != pan.cols())
        throw InputError("infer: DSM and PAN shapes differ");
    if (std::abs(dsm.gsd_m - pan.gsd_m) > 1e-6f)
        throw InputError("infer: DSM and PAN GSD differ");

    const ckpt::Checkpoint c = ckpt::Checkpoint::load(checkpoint);
    RandomSource init_rng(0);
    auto generator = nets::build_generator(c.generator_spec, init_rng);
    nets::ParamList params;
    nets::BufferList buffers;
    generator->collect(params);
    generator->collect_buffers(buffers);
    for (const auto& [name, p] : params.params) {
        const Tensor* t = c.find(name);
        if (!t) throw CompatibilityError("checkpoint is missing tensor " + name);
        p->value = *t;
    }
    for (const auto& [name, b] : buffers.buffers) {
        const Tensor* t = c.find(name);
        if (!t) throw CompatibilityError("checkpoint is missing buffer " + name);
        *b = *t;
    }

    const int patch = c.generator_spec.in_size;
    const RasterGrid dsm_norm = normalize(dsm, c.height_norm);
    const RasterGrid pan_norm = normalize(pan, c.intensity_norm);
    TileSet dsm_tiles = tile(dsm_norm, patch, patch);
    TileSet pan_tiles = tile(pan_norm, patch, patch);

    std::vector<RasterGrid> out_tiles;
    out_tiles.reserve(dsm_tiles.patches.size());
    for (std::size_t i = 0; i < dsm_tiles.patches.size(); ++i) {
        Tensor in_dsm(nn::Shape4{1, 1, patch, patch});
        Tensor in_pan(nn::Shape4{1, 1, patch, patch});
        std::copy(dsm_tiles.patches[i].values().begin(),
                  dsm_tiles.patches[i].values().end(), in_dsm.vec().begin());
        std::copy(pan_tiles.patches[i].values().begin(),
                  pan_tiles.patches[i].values().end(), in_pan.vec().begin());
        Var out = generator->forward(nn::constant(std::move(in_dsm)),
                                     nn::constant(std::move(in_pan)),
                                     /*training=*/false, nullptr);
        RasterGrid tile_grid(patch, patch);
        tile_grid.gsd_m = dsm.gsd_m;
        std::copy(out->value.vec().begin(), out->value.vec().end(),
                  tile_grid.values().begin());
        out_tiles.push_back(std::move(tile_grid));
    }

    InferResult result;
    dsm_tiles.layout.nodata.reset();
    RasterGrid assembled = untile(out_tiles, dsm_tiles.layout);
    result.refined = denormalize(assembled, c.height_norm, &result.clamped_pixels);
    result.refined.kind = RasterKind::dsm;
    result.refined.nodata.reset();

    result.validity = RasterGrid(dsm.rows(), dsm.cols(), 1.0f);
    result.validity.gsd_m = dsm.gsd_m;
    result.validity.origin_x = dsm.origin_x;
    result.validity.origin_y = dsm.origin_y;
    result.validity.kind = RasterKind::mask;
    for (std::size_t i = 0; i < dsm.size(); ++i)
        if (dsm.is_nodata(dsm.values()[i])) result.validity.values()[i] = 0.0f;
    return result;
}

}  // namespace wnetgan::train
