#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "wnetgan/checkpoint.hpp"
#include "wnetgan/dataset.hpp"
#include "wnetgan/errors.hpp"
#include "wnetgan/rng.hpp"
#include "wnetgan/synth.hpp"

using namespace wnetgan;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

data::DatasetManifest tiny_dataset(const fs::path& dir, int count = 4) {
    synth::DatasetSpec spec;
    spec.scene.rows = 48;
    spec.scene.cols = 48;
    spec.scene.n_buildings = 2;
    spec.scene.seed = 5;
    spec.degrade.seed = 5;
    spec.degrade.dropout_rate = 0.05f;
    spec.count = count;
    return synth::build_dataset(spec, dir);
}

}  // namespace

TEST_CASE("dataset manifest round trip preserves every field") {
    const fs::path dir = fresh_dir("wnetgan_manifest_rt");
    const data::DatasetManifest m = tiny_dataset(dir);
    const data::DatasetManifest r = data::DatasetManifest::load(dir / "dataset.json");
    CHECK(r.gsd_m == m.gsd_m);
    CHECK(r.height_norm.h_min == m.height_norm.h_min);
    CHECK(r.height_norm.h_max == m.height_norm.h_max);
    CHECK(r.intensity_norm.h_min == 0.0f);
    CHECK(r.train_ids == m.train_ids);
    CHECK(r.val_ids == m.val_ids);
    CHECK(r.test_ids == m.test_ids);
    REQUIRE(r.scenes.size() == m.scenes.size());
    CHECK(r.scenes[2].stereo == m.scenes[2].stereo);
    CHECK_THROWS_AS(r.scene(999), InputError);
    CHECK_THROWS_AS(data::DatasetManifest::load(dir / "absent.json"), IoError);
}

TEST_CASE("make_patch normalizes, masks nodata and flips jointly") {
    const fs::path dir = fresh_dir("wnetgan_patch");
    const data::DatasetManifest m = tiny_dataset(dir);
    const data::SceneRasters scene = data::load_scene(m, 0);

    const int P = 32;
    const data::PatchSample s = data::make_patch(scene, m, P, 4, 6, false);
    CHECK(s.stereo.shape() == nn::Shape4{1, 1, P, P});
    for (int r = 0; r < P; ++r)
        for (int c = 0; c < P; ++c) {
            const float raw = scene.stereo.at(4 + r, 6 + c);
            const float got = s.stereo.at(0, 0, r, c);
            CHECK(got >= -1.0f);
            CHECK(got <= 1.0f);
            if (scene.stereo.is_nodata(raw)) {
                CHECK(got == -1.0f);
                CHECK(s.valid.at(0, 0, r, c) == 0.0f);
            } else {
                CHECK(s.valid.at(0, 0, r, c) == 1.0f);
                const double expect =
                    2.0 * (raw - m.height_norm.h_min) /
                        (m.height_norm.h_max - m.height_norm.h_min) -
                    1.0;
                CHECK(got == doctest::Approx(expect).epsilon(1e-6));
            }
        }

    const data::PatchSample f = data::make_patch(scene, m, P, 4, 6, true);
    for (int r = 0; r < P; ++r)
        for (int c = 0; c < P; ++c) {
            CHECK(f.stereo.at(0, 0, r, c) == s.stereo.at(0, 0, r, P - 1 - c));
            CHECK(f.pan.at(0, 0, r, c) == s.pan.at(0, 0, r, P - 1 - c));
            CHECK(f.gt.at(0, 0, r, c) == s.gt.at(0, 0, r, P - 1 - c));
            CHECK(f.valid.at(0, 0, r, c) == s.valid.at(0, 0, r, P - 1 - c));
        }

    CHECK_THROWS_AS(data::make_patch(scene, m, 128, 0, 0, false), InputError);
    CHECK_THROWS_AS(data::make_patch(scene, m, 32, 40, 0, false), ParameterError);
}

TEST_CASE("stack_batch preserves order and shape") {
    const fs::path dir = fresh_dir("wnetgan_stack");
    const data::DatasetManifest m = tiny_dataset(dir);
    std::vector<data::PatchSample> samples;
    for (int id : {0, 1, 2}) {
        const data::SceneRasters scene = data::load_scene(m, id);
        samples.push_back(data::make_patch(scene, m, 32, 0, 0, false));
    }
    const data::Batch b = data::stack_batch(samples);
    CHECK(b.stereo.shape() == nn::Shape4{3, 1, 32, 32});
    for (int n = 0; n < 3; ++n)
        for (int i = 0; i < 32 * 32; ++i)
            CHECK(b.gt.vec()[n * 1024 + i] == samples[n].gt.vec()[i]);
    CHECK_THROWS_AS(data::stack_batch({}), ParameterError);
}

TEST_CASE("checkpoint container round trips tensors, counters and rng state") {
    const fs::path dir = fresh_dir("wnetgan_ckpt");
    RandomSource rng(44);

    ckpt::Checkpoint c;
    c.generator_spec.in_size = 64;
    c.generator_spec.n_levels = 6;
    c.generator_spec.base_width = 16;
    c.generator_spec.arch = "unet_dsm";
    c.discriminator_spec.widths = {8, 16, 32, 64, 1};
    c.epoch = 7;
    c.global_step = 123;
    c.g_opt_steps = 41;
    c.d_opt_steps = 42;
    c.height_norm = NormSpec{-3.0f, 55.0f, NormSpec::Kind::height};
    for (int i = 0; i < 5; ++i) {
        nn::Tensor t(nn::Shape4{1 + i, 2, 3, 1 + i});
        for (auto& v : t.vec()) v = static_cast<float>(rng.uniform(-4, 4));
        c.tensors.emplace_back("tensor_" + std::to_string(i), std::move(t));
    }
    c.rng_state = rng.save_state();

    c.save(dir / "ckpt_test");
    const ckpt::Checkpoint r = ckpt::Checkpoint::load(dir / "ckpt_test.json");
    CHECK(r.generator_spec == c.generator_spec);
    CHECK(r.discriminator_spec == c.discriminator_spec);
    CHECK(r.epoch == 7);
    CHECK(r.global_step == 123);
    CHECK(r.g_opt_steps == 41);
    CHECK(r.d_opt_steps == 42);
    CHECK(r.height_norm.h_min == -3.0f);
    CHECK(r.height_norm.h_max == 55.0f);
    CHECK(r.rng_state == c.rng_state);
    REQUIRE(r.tensors.size() == c.tensors.size());
    for (std::size_t i = 0; i < r.tensors.size(); ++i) {
        CHECK(r.tensors[i].first == c.tensors[i].first);
        CHECK(r.tensors[i].second.shape() == c.tensors[i].second.shape());
        CHECK(r.tensors[i].second.vec() == c.tensors[i].second.vec());
    }
    CHECK(r.find("tensor_3") != nullptr);
    CHECK(r.find("absent") == nullptr);

    // the restored RNG continues the exact stream the writer left off at
    RandomSource replay(0);
    replay.restore_state(r.rng_state);
    for (int i = 0; i < 10; ++i) CHECK(replay.uniform() == rng.uniform());
}

TEST_CASE("checkpoint loader rejects damaged containers") {
    const fs::path dir = fresh_dir("wnetgan_ckpt_bad");
    ckpt::Checkpoint c;
    c.tensors.emplace_back("t", nn::Tensor(nn::Shape4{1, 1, 2, 2}, 1.0f));
    c.save(dir / "ok");

    SUBCASE("missing payload") {
        fs::remove(dir / "ok.wns");
        CHECK_THROWS_AS(ckpt::Checkpoint::load(dir / "ok.json"), IoError);
    }
    SUBCASE("truncated payload") {
        fs::resize_file(dir / "ok.wns", 10);
        CHECK_THROWS_AS(ckpt::Checkpoint::load(dir / "ok.json"), CorruptionError);
    }
    SUBCASE("bad magic") {
        std::ofstream out(dir / "ok.wns", std::ios::binary | std::ios::trunc);
        out << "XXXXXXXXXXXXXXXX";
        out.close();
        CHECK_THROWS_AS(ckpt::Checkpoint::load(dir / "ok.json"), FormatError);
    }
}
