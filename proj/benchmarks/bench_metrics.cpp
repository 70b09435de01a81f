#include <benchmark/benchmark.h>

#include "wnetgan/metrics.hpp"
#include "wnetgan/rng.hpp"
#include "wnetgan/synth.hpp"

using namespace wnetgan;

namespace {

void BM_Evaluate(benchmark::State& state) {
    synth::SceneSpec spec;
    spec.rows = static_cast<int>(state.range(0));
    spec.cols = spec.rows;
    spec.n_buildings = spec.rows / 24;
    spec.seed = 9;
    const synth::Scene scene = synth::generate_scene(spec);
    RandomSource rng(10);
    RasterGrid pred = scene.gt_dsm;
    for (auto& v : pred.values()) v += static_cast<float>(rng.normal(0.0, 0.8));
    for (auto _ : state) {
        auto report = metrics::evaluate(pred, scene.gt_dsm, scene.footprints, 3);
        benchmark::DoNotOptimize(report.mae_m);
    }
}
BENCHMARK(BM_Evaluate)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_ExtractProfile(benchmark::State& state) {
    synth::SceneSpec spec;
    spec.rows = 512;
    spec.cols = 512;
    spec.n_buildings = 20;
    spec.seed = 11;
    const synth::Scene scene = synth::generate_scene(spec);
    const metrics::ProfileLine line{10.0, 10.0, 500.0, 480.0, 1024};
    for (auto _ : state) {
        auto profile = metrics::extract_profile(scene.gt_dsm, line);
        benchmark::DoNotOptimize(profile.data());
    }
}
BENCHMARK(BM_ExtractProfile);

void BM_GenerateScene(benchmark::State& state) {
    synth::SceneSpec spec;
    spec.rows = static_cast<int>(state.range(0));
    spec.cols = spec.rows;
    spec.n_buildings = spec.rows / 16;
    for (auto _ : state) {
        spec.seed++;
        auto scene = synth::generate_scene(spec);
        benchmark::DoNotOptimize(scene.gt_dsm.values().data());
    }
}
BENCHMARK(BM_GenerateScene)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace
