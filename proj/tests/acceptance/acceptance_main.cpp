// Acceptance suite: one numbered criterion per function, each printing a
// single PASS/FAIL line. Run with no arguments for all criteria or pass the
// numbers to run (e.g. "acceptance 1 4 9").

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "wnetgan/checkpoint.hpp"
#include "wnetgan/dataset.hpp"
#include "wnetgan/errors.hpp"
#include "wnetgan/metrics.hpp"
#include "wnetgan/nets.hpp"
#include "wnetgan/objective.hpp"
#include "wnetgan/optim.hpp"
#include "wnetgan/raster.hpp"
#include "wnetgan/rng.hpp"
#include "wnetgan/synth.hpp"
#include "wnetgan/tensor.hpp"
#include "wnetgan/trainer.hpp"

using namespace wnetgan;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
    if (!cond) throw CheckFailure(what);
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    require(in.good(), "cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// criterion 1 + 2: metric oracles
// ---------------------------------------------------------------------------

struct Instance {
    RasterGrid pred, gt, mask;
};

Instance random_instance(RandomSource& rng, int max_dim) {
    const int rows = rng.uniform_int(1, max_dim), cols = rng.uniform_int(1, max_dim);
    Instance in{RasterGrid(rows, cols), RasterGrid(rows, cols),
                RasterGrid(rows, cols, 0.0f)};
    in.mask.kind = RasterKind::mask;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            in.pred.at(r, c) = static_cast<float>(rng.uniform(-30, 80));
            in.gt.at(r, c) = static_cast<float>(rng.uniform(-30, 80));
            in.mask.at(r, c) = rng.uniform() < 0.6 ? 1.0f : 0.0f;
        }
    return in;
}

double oracle_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Single-loop reference computations, independent of the library path.
struct Oracle {
    double mae = 0, rmse = 0, nmad = 0, ncc = 0;
    std::size_t n = 0;
};

Oracle brute_force(const Instance& in) {
    std::vector<double> ps, gs, deltas;
    for (int r = 0; r < in.pred.rows(); ++r)
        for (int c = 0; c < in.pred.cols(); ++c) {
            if (in.mask.at(r, c) != 1.0f) continue;
            if (in.pred.is_nodata(in.pred.at(r, c)) ||
                in.gt.is_nodata(in.gt.at(r, c)))
                continue;
            ps.push_back(in.pred.at(r, c));
            gs.push_back(in.gt.at(r, c));
            deltas.push_back(static_cast<double>(in.pred.at(r, c)) - in.gt.at(r, c));
        }
    Oracle o;
    o.n = deltas.size();
    if (o.n == 0) return o;
    const double n = static_cast<double>(o.n);
    for (double d : deltas) {
        o.mae += std::abs(d);
        o.rmse += d * d;
    }
    o.mae /= n;
    o.rmse = std::sqrt(o.rmse / n);
    const double med = oracle_median(deltas);
    std::vector<double> devs;
    for (double d : deltas) devs.push_back(std::abs(d - med));
    o.nmad = 1.4826 * oracle_median(devs);
    double mp = 0, mg = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        mp += ps[i];
        mg += gs[i];
    }
    mp /= n;
    mg /= n;
    double cov = 0, vp = 0, vg = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        cov += (ps[i] - mp) * (gs[i] - mg);
        vp += (ps[i] - mp) * (ps[i] - mp);
        vg += (gs[i] - mg) * (gs[i] - mg);
    }
    o.ncc = (vp > 0 && vg > 0) ? cov / std::sqrt(vp * vg) : 0.0;
    return o;
}

void criterion_1() {
    const auto start = Clock::now();
    RandomSource rng(20201);
    int checked = 0;
    for (int trial = 0; trial < 500; ++trial) {
        Instance in = random_instance(rng, 16);
        const Oracle o = brute_force(in);
        if (o.n < 2) continue;
        ++checked;
        require(std::abs(metrics::mae(in.pred, in.gt, in.mask) - o.mae) <= 1e-9,
                "mae deviates from oracle");
        require(std::abs(metrics::rmse(in.pred, in.gt, in.mask) - o.rmse) <= 1e-9,
                "rmse deviates from oracle");
        require(std::abs(metrics::nmad(in.pred, in.gt, in.mask) - o.nmad) <= 1e-9,
                "nmad deviates from oracle");
        require(std::abs(metrics::ncc(in.pred, in.gt, in.mask) - o.ncc) <= 1e-9,
                "ncc deviates from oracle");
    }
    require(checked >= 400, "too few usable instances");
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    require(secs < 10.0, "oracle sweep exceeded 10 s");
    std::printf("  (%d instances in %.2f s)\n", checked, secs);
}

void criterion_2() {
    // worked example {0,1,2,3,100} -> exactly 1.4826
    RasterGrid gt(1, 5, 0.0f), pred(1, 5);
    pred.at(0, 0) = 0;
    pred.at(0, 1) = 1;
    pred.at(0, 2) = 2;
    pred.at(0, 3) = 3;
    pred.at(0, 4) = 100;
    RasterGrid mask(1, 5, 1.0f);
    mask.kind = RasterKind::mask;
    require(std::abs(metrics::nmad(pred, gt, mask) - 1.4826) <= 1e-12,
            "nmad worked example not exact");

    RandomSource rng(20202);
    for (int trial = 0; trial < 300; ++trial) {
        Instance in = random_instance(rng, 16);
        if (brute_force(in).n < 2) continue;
        const double base = metrics::nmad(in.pred, in.gt, in.mask);
        RasterGrid shifted = in.pred;
        const float bias = static_cast<float>(rng.uniform(-50, 50));
        for (auto& v : shifted.values()) v += bias;
        // the shift itself rounds in float32, so allow ~eps * |values|
        require(std::abs(metrics::nmad(shifted, in.gt, in.mask) - base) <= 1e-4,
                "nmad not invariant to constant bias");
        require(metrics::mae(in.pred, in.gt, in.mask) <=
                    metrics::rmse(in.pred, in.gt, in.mask) + 1e-12,
                "mae > rmse");
    }
}

void criterion_3() {
    RandomSource rng(20203);
    for (int trial = 0; trial < 200; ++trial) {
        RasterGrid mask(rng.uniform_int(1, 32), rng.uniform_int(1, 32), 0.0f);
        mask.kind = RasterKind::mask;
        for (auto& v : mask.values()) v = rng.uniform() < 0.12 ? 1.0f : 0.0f;
        const int radius = rng.uniform_int(0, 4);
        const RasterGrid got = dilate_mask(mask, radius);
        for (int r = 0; r < mask.rows(); ++r)
            for (int c = 0; c < mask.cols(); ++c) {
                float expect = 0.0f;
                for (int rr = 0; rr < mask.rows() && expect == 0.0f; ++rr)
                    for (int cc = 0; cc < mask.cols(); ++cc)
                        if (mask.at(rr, cc) == 1.0f &&
                            std::max(std::abs(rr - r), std::abs(cc - c)) <= radius) {
                            expect = 1.0f;
                            break;
                        }
                require(got.at(r, c) == expect, "dilation deviates from Chebyshev oracle");
            }
    }
    RasterGrid single(9, 9, 0.0f);
    single.kind = RasterKind::mask;
    single.at(4, 4) = 1.0f;
    const RasterGrid d3 = dilate_mask(single, 3);
    std::size_t ones = 0;
    for (float v : d3.values()) ones += v == 1.0f;
    require(ones == 49, "radius-3 single pixel should dilate to a 7x7 block");
    for (int r = 1; r <= 7; ++r)
        for (int c = 1; c <= 7; ++c)
            require(d3.at(r, c) == 1.0f, "7x7 block misplaced");
}

// ---------------------------------------------------------------------------
// criterion 4: loss gradients vs central finite differences
// ---------------------------------------------------------------------------

nn::Tensor random_map(RandomSource& rng, double lo, double hi) {
    nn::Tensor t(nn::Shape4{1, 1, 4, 4});
    for (auto& v : t.vec()) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

void check_grad(const std::function<double(const nn::Tensor&)>& f, nn::Tensor x,
                const nn::Tensor& analytic, const char* what) {
    for (std::size_t idx = 0; idx < 16; ++idx) {
        const float base = x.vec()[idx];
        const double h = 1e-4;
        const float hi = static_cast<float>(base + h);
        const float lo = static_cast<float>(base - h);
        x.vec()[idx] = hi;
        const double fp = f(x);
        x.vec()[idx] = lo;
        const double fm = f(x);
        x.vec()[idx] = base;
        const double fd = (fp - fm) / (static_cast<double>(hi) - lo);
        const double a = analytic.vec()[idx];
        const double scale = std::max({std::abs(a), std::abs(fd), 1e-8});
        require(std::abs(a - fd) / scale <= 1e-3,
                std::string(what) + ": gradient off at element " + std::to_string(idx));
    }
}

void criterion_4() {
    RandomSource rng(20204);
    objective::LossWeights w;

    const nn::Tensor real = random_map(rng, 0.05, 0.95);
    const nn::Tensor fake = random_map(rng, 0.05, 0.95);
    {
        nn::Var rv = nn::leaf(real, true), fv = nn::leaf(fake, true);
        nn::backward(objective::d_loss_node(rv, fv, w));
        check_grad([&](const nn::Tensor& t) { return objective::d_loss(t, fake); }, real,
                   rv->grad, "d_loss/real");
        check_grad([&](const nn::Tensor& t) { return objective::d_loss(real, t); }, fake,
                   fv->grad, "d_loss/fake");
    }
    {
        nn::Var fv = nn::leaf(fake, true);
        nn::backward(objective::g_adv_loss_node(fv, w));
        check_grad([&](const nn::Tensor& t) { return objective::g_adv_loss(t); }, fake,
                   fv->grad, "g_adv_loss");
    }
    {
        nn::Tensor gen = random_map(rng, -0.9, 0.9);
        const nn::Tensor gt = random_map(rng, -0.9, 0.9);
        for (std::size_t i = 0; i < 16; ++i)
            if (std::abs(gen.vec()[i] - gt.vec()[i]) < 5e-3f)
                gen.vec()[i] = gt.vec()[i] + 0.25f;
        nn::Var gv = nn::leaf(gen, true);
        nn::backward(objective::l1_loss_node(gv, nn::constant(gt), nullptr));
        check_grad([&](const nn::Tensor& t) { return objective::l1_loss(t, gt); }, gen,
                   gv->grad, "l1_loss");

        nn::Var gv2 = nn::leaf(gen, true);
        nn::backward(objective::g_total_loss_node(nn::constant(fake), gv2,
                                                  nn::constant(gt), w, nullptr));
        check_grad(
            [&](const nn::Tensor& t) { return objective::g_total_loss(fake, t, gt, w); },
            gen, gv2->grad, "g_total_loss");
    }
}

// ---------------------------------------------------------------------------
// criterion 5: architecture conformance at the published scale
// ---------------------------------------------------------------------------

void criterion_5() {
    RandomSource rng(20205);
    const nets::GeneratorSpec gspec;          // 256 / 64 / 8 levels / fusion 64
    const nets::DiscriminatorSpec dspec;      // 64,128,256,512,1 with slope 0.2
    require(dspec.leaky_slope == 0.2f, "default leaky slope must be 0.2");

    nets::WNetGenerator g(gspec, rng);
    nets::PatchDiscriminator d(dspec, rng);
    require(d.n_conv_layers() == 5, "discriminator must have exactly 5 conv layers");
    require(g.fusion_conv().kernel() == 1, "fusion conv must be spatially 1x1");
    require(g.fusion_conv().in_channels() == 4 * gspec.base_width,
            "fusion conv input must equal the sum of both streams' channels");

    RandomSource data_rng(20206), dropout_rng(20207);
    const int B = 2;
    nn::Tensor dsm(nn::Shape4{B, 1, 256, 256}), pan(dsm.shape()), gt(dsm.shape());
    for (auto* t : {&dsm, &pan, &gt})
        for (auto& v : t->vec()) v = static_cast<float>(data_rng.uniform(-1, 1));

    nets::ParamList gp, dp;
    g.collect(gp);
    d.collect(dp);
    std::vector<nn::Var> g_vars, d_vars;
    for (auto& [n, p] : gp.params) g_vars.push_back(p);
    for (auto& [n, p] : dp.params) d_vars.push_back(p);
    nn::AdamOptimizer g_opt(g_vars, 2e-4f, 0.5f, 0.999f);
    nn::AdamOptimizer d_opt(d_vars, 2e-4f, 0.5f, 0.999f);
    objective::LossWeights w;

    // one full optimization step, exactly as the trainer runs it
    nn::Var fake = g.forward(nn::constant(dsm), nn::constant(pan), true, &dropout_rng);
    require(fake->value.shape() == nn::Shape4{B, 1, 256, 256},
            "generator output must be (B,1,256,256)");
    for (float v : fake->value.vec())
        require(v >= -1.0f && v <= 1.0f, "generator output must lie in [-1,1]");

    d_opt.zero_grad();
    nn::Var d_real = d.forward(nn::constant(dsm), nn::constant(gt), true);
    require(d_real->value.shape() == nn::Shape4{B, 1, 30, 30},
            "discriminator map must be (B,1,30,30) for 256 input");
    for (float v : d_real->value.vec())
        require(v > 0.0f && v < 1.0f, "discriminator outputs must be sigmoid probabilities");
    nn::Var d_fake = d.forward(nn::constant(dsm), nn::detach(fake), true);
    nn::backward(objective::d_loss_node(d_real, d_fake, w));
    auto audit = [](const nets::ParamList& list, const char* which) {
        for (const auto& [name, p] : list.params) {
            require(p->grad_allocated, std::string(which) + " parameter missing grad: " + name);
            bool nonzero = false;
            for (float v : p->grad.vec()) {
                require(std::isfinite(v), "non-finite gradient in " + name);
                nonzero |= v != 0.0f;
            }
            require(nonzero, std::string(which) + " parameter has all-zero grad: " + name);
        }
    };
    audit(dp, "discriminator");
    d_opt.step();

    g_opt.zero_grad();
    nn::set_requires_grad(dp, false);
    nn::Var d_fake2 = d.forward(nn::constant(dsm), fake, true);
    nn::backward(objective::g_total_loss_node(d_fake2, fake, nn::constant(gt), w, nullptr));
    nn::set_requires_grad(dp, true);
    audit(gp, "generator");
    g_opt.step();
}

// ---------------------------------------------------------------------------
// criteria 6 + 7: training runs
// ---------------------------------------------------------------------------

data::DatasetManifest accept_dataset(const fs::path& dir, int count, std::uint64_t seed) {
    synth::DatasetSpec spec;
    spec.scene.rows = 64;
    spec.scene.cols = 64;
    spec.scene.n_buildings = 2;
    spec.scene.height_min_m = 4.0f;
    spec.scene.height_max_m = 16.0f;
    spec.scene.seed = seed;
    spec.degrade.seed = seed + 10'000;
    spec.degrade.noise_sigma_m = 1.0f;
    spec.degrade.smooth_radius_px = 2;
    spec.degrade.dropout_rate = 0.01f;
    spec.degrade.veg_blob_count = 5;
    spec.degrade.veg_height_m = 8.0f;
    spec.count = count;
    return synth::build_dataset(spec, dir);
}

train::TrainConfig accept_config(int epochs, std::uint64_t seed, const std::string& arch,
                                 int width) {
    train::TrainConfig c;
    c.epochs = epochs;
    c.batch_size = 5;
    c.patch_size = 64;
    c.seed = seed;
    c.checkpoint_every = 1000;
    c.generator.arch = arch;
    c.generator.in_size = 64;
    c.generator.n_levels = 6;
    c.generator.base_width = width;
    c.generator.fusion_width = width;
    c.discriminator.widths = {width, 2 * width, 4 * width, 8 * width, 1};
    return c;
}

void criterion_6() {
    const auto start = Clock::now();
    const fs::path ds_dir = fresh_dir("wnetgan_accept6_ds");
    accept_dataset(ds_dir, 16, 606);
    const fs::path manifest = ds_dir / "dataset.json";

    train::TrainConfig config = accept_config(2, 42, "wnet", 16);
    config.deterministic = true;

    const train::TrainResult a =
        train::train(config, manifest, fresh_dir("wnetgan_accept6_a"));
    const train::TrainResult b =
        train::train(config, manifest, fresh_dir("wnetgan_accept6_b"));
    require(slurp(a.log_path) == slurp(b.log_path),
            "two seeded runs must produce identical loss logs");

    // save at epoch 1, resume to epoch 2: trajectory matches the full run
    train::TrainConfig half = config;
    half.epochs = 1;
    const train::TrainResult first_half =
        train::train(half, manifest, fresh_dir("wnetgan_accept6_half"));
    const train::TrainResult resumed = train::resume(
        first_half.final_checkpoint, config, manifest, fresh_dir("wnetgan_accept6_rest"));

    fs::path a_wns = a.final_checkpoint;
    a_wns.replace_extension(".wns");
    fs::path r_wns = resumed.final_checkpoint;
    r_wns.replace_extension(".wns");
    require(slurp(a_wns) == slurp(r_wns),
            "resumed run must reproduce the uninterrupted final state bit-exactly");

    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    require(secs < 2400.0, "determinism harness exceeded the 40-minute CPU budget");
    std::printf("  (three 2-epoch runs + resume in %.1f s)\n", secs);
}

struct EvalMeans {
    double mae = 0.0, ncc = 0.0;
};

EvalMeans mean_metrics(const data::DatasetManifest& m, const std::vector<int>& ids,
                       const std::function<RasterGrid(const data::SceneRasters&)>& predict) {
    EvalMeans out;
    int used = 0;
    for (int id : ids) {
        const data::SceneRasters scene = data::load_scene(m, id);
        const RasterGrid pred = predict(scene);
        const metrics::MetricsReport r =
            metrics::evaluate(pred, scene.gt, scene.mask, 3);
        out.mae += r.mae_m;
        out.ncc += r.ncc;
        ++used;
    }
    require(used > 0, "empty test split");
    out.mae /= used;
    out.ncc /= used;
    return out;
}

void criterion_7() {
    const auto start = Clock::now();
    const int epochs = 30;
    const int width = 16;
    const std::uint64_t seeds[3] = {101, 202, 303};

    int votes = 0;
    for (int s = 0; s < 3; ++s) {
        const auto seed_start = Clock::now();
        const fs::path ds_dir = fresh_dir("wnetgan_accept7_ds_" + std::to_string(s));
        const data::DatasetManifest m = accept_dataset(ds_dir, 64, 7000 + seeds[s]);
        const fs::path manifest = ds_dir / "dataset.json";

        const train::TrainResult wnet =
            train::train(accept_config(epochs, seeds[s], "wnet", width), manifest,
                         fresh_dir("wnetgan_accept7_wnet_" + std::to_string(s)));
        const train::TrainResult unet =
            train::train(accept_config(epochs, seeds[s], "unet_dsm", width), manifest,
                         fresh_dir("wnetgan_accept7_unet_" + std::to_string(s)));

        const EvalMeans stereo = mean_metrics(
            m, m.test_ids, [](const data::SceneRasters& sc) { return sc.stereo; });
        const EvalMeans unet_m = mean_metrics(
            m, m.test_ids, [&](const data::SceneRasters& sc) {
                return train::infer(unet.final_checkpoint, sc.stereo, sc.pan).refined;
            });
        const EvalMeans wnet_m = mean_metrics(
            m, m.test_ids, [&](const data::SceneRasters& sc) {
                return train::infer(wnet.final_checkpoint, sc.stereo, sc.pan).refined;
            });

        const bool mae_ok = stereo.mae > unet_m.mae && unet_m.mae > wnet_m.mae;
        const bool ncc_ok = stereo.ncc < unet_m.ncc && unet_m.ncc < wnet_m.ncc;
        const double secs =
            std::chrono::duration<double>(Clock::now() - seed_start).count();
        std::printf(
            "  seed %llu: MAE %.3f > %.3f > %.3f %s | NCC %.3f < %.3f < %.3f %s "
            "(%.0f s)\n",
            static_cast<unsigned long long>(seeds[s]), stereo.mae, unet_m.mae,
            wnet_m.mae, mae_ok ? "ok" : "VIOLATED", stereo.ncc, unet_m.ncc, wnet_m.ncc,
            ncc_ok ? "ok" : "VIOLATED", secs);
        if (mae_ok && ncc_ok) ++votes;
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    std::printf("  (%d/3 seeds honor the ordering; %.0f s total)\n", votes, secs);
    require(votes >= 2, "directional ordering must hold for a majority of seeds");
}

// ---------------------------------------------------------------------------
// criterion 8: tiled-inference equivalence
// ---------------------------------------------------------------------------

void criterion_8() {
    // untile . tile identity at stride == tile size
    RandomSource rng(20208);
    for (int dims : {256, 300}) {
        RasterGrid g(dims, dims);
        for (auto& v : g.values()) v = static_cast<float>(rng.uniform(-40, 120));
        const TileSet t = tile(g, 256, 256);
        const RasterGrid back = untile(t.patches, t.layout);
        require(back.values() == g.values(), "untile(tile(x)) must be bit-exact");
    }

    // single-patch inference equals the direct generator path bit-exactly
    nets::GeneratorSpec spec;  // 256 input
    spec.base_width = 4;
    spec.fusion_width = 4;
    RandomSource init_rng(20209);
    auto g = nets::build_generator(spec, init_rng);

    ckpt::Checkpoint c;
    c.generator_spec = spec;
    c.height_norm = NormSpec{0.0f, 50.0f, NormSpec::Kind::height};
    c.intensity_norm = NormSpec{0.0f, 1.0f, NormSpec::Kind::intensity};
    c.rng_state = init_rng.save_state();
    nets::ParamList params;
    nets::BufferList buffers;
    g->collect(params);
    g->collect_buffers(buffers);
    for (auto& [name, p] : params.params) c.tensors.emplace_back(name, p->value);
    for (auto& [name, b] : buffers.buffers) c.tensors.emplace_back(name, *b);
    const fs::path dir = fresh_dir("wnetgan_accept8");
    c.save(dir / "ckpt");

    RasterGrid dsm(256, 256), pan(256, 256);
    pan.kind = RasterKind::pan;
    for (auto& v : dsm.values()) v = static_cast<float>(rng.uniform(0, 50));
    for (auto& v : pan.values()) v = static_cast<float>(rng.uniform(0, 1));

    const train::InferResult res = train::infer(dir / "ckpt.json", dsm, pan);
    require(res.refined.rows() == 256 && res.refined.cols() == 256,
            "inference must preserve the raster shape");

    const RasterGrid dn = normalize(dsm, c.height_norm);
    const RasterGrid pn = normalize(pan, c.intensity_norm);
    nn::Tensor dt(nn::Shape4{1, 1, 256, 256}), pt(dt.shape());
    std::copy(dn.values().begin(), dn.values().end(), dt.vec().begin());
    std::copy(pn.values().begin(), pn.values().end(), pt.vec().begin());
    nn::Var direct = g->forward(nn::constant(dt), nn::constant(pt), false, nullptr);
    RasterGrid direct_grid(256, 256);
    std::copy(direct->value.vec().begin(), direct->value.vec().end(),
              direct_grid.values().begin());
    const RasterGrid direct_m = denormalize(direct_grid, c.height_norm);
    require(res.refined.values() == direct_m.values(),
            "tiled inference must equal the direct single-patch output bit-exactly");
}

// ---------------------------------------------------------------------------
// criterion 9: reference constants + table printer
// ---------------------------------------------------------------------------

void criterion_9() {
    const auto& ref = metrics::kBerlinReference;
    require(ref[0].mae == 3.00 && ref[0].rmse == 5.97 && ref[0].nmad == 1.48 &&
                ref[0].ncc == 0.90,
            "stereo DSM reference row altered");
    require(ref[1].mae == 2.01 && ref[1].rmse == 4.78 && ref[1].nmad == 0.86 &&
                ref[1].ncc == 0.92,
            "cGAN reference row altered");
    require(ref[2].mae == 1.79 && ref[2].rmse == 4.36 && ref[2].nmad == 0.67 &&
                ref[2].ncc == 0.94,
            "fused reference row altered");

    std::vector<std::pair<std::string, metrics::MetricsReport>> rows;
    for (const auto& r : ref)
        rows.emplace_back(r.label,
                          metrics::MetricsReport(r.mae, r.rmse, r.nmad, r.ncc, 1, 3, 0));
    const std::string table = metrics::format_table(rows);
    std::printf("%s", table.c_str());
    for (const char* needle :
         {"MAE, m", "RMSE, m", "NMAD, m", "NCC", "Stereo DSM", "cGAN", "Fused-cGAN",
          "3.00", "5.97", "1.48", "0.90", "2.01", "4.78", "0.86", "0.92", "1.79",
          "4.36", "0.67", "0.94"})
        require(table.find(needle) != std::string::npos,
                std::string("table is missing '") + needle + "'");
    require(table.find("MAE") < table.find("RMSE") &&
                table.find("RMSE") < table.find("NMAD") &&
                table.find("NMAD") < table.find("NCC"),
            "table column order must be MAE, RMSE, NMAD, NCC");
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<int, std::pair<const char*, std::function<void()>>> criteria = {
        {1, {"metric oracle equivalence (500 masked instances, 1e-9)", criterion_1}},
        {2, {"nmad worked example, bias invariance, mae <= rmse", criterion_2}},
        {3, {"mask dilation vs Chebyshev-ball oracle", criterion_3}},
        {4, {"loss gradients vs central finite differences", criterion_4}},
        {5, {"architecture conformance and full gradient flow", criterion_5}},
        {6, {"seeded training determinism and resume equivalence", criterion_6}},
        {7, {"directional accuracy ordering: stereo -> cGAN -> WNet-cGAN", criterion_7}},
        {8, {"tiled-inference equivalence", criterion_8}},
        {9, {"reference table constants and printer layout", criterion_9}},
    };

    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    if (selected.empty())
        for (const auto& [num, _] : criteria) selected.push_back(num);

    int failures = 0;
    for (int num : selected) {
        const auto it = criteria.find(num);
        if (it == criteria.end()) {
            std::fprintf(stderr, "unknown criterion %d\n", num);
            return 2;
        }
        const auto& [description, fn] = it->second;
        try {
            fn();
            std::printf("[PASS] criterion %d: %s\n", num, description);
        } catch (const std::exception& e) {
            std::printf("[FAIL] criterion %d: %s\n        %s\n", num, description,
                        e.what());
            ++failures;
        }
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
