#include <benchmark/benchmark.h>

#include "wnetgan/raster.hpp"
#include "wnetgan/rng.hpp"

using namespace wnetgan;

namespace {

RasterGrid random_raster(int dim, std::uint64_t seed) {
    RandomSource rng(seed);
    RasterGrid g(dim, dim);
    for (auto& v : g.values()) v = static_cast<float>(rng.uniform(0, 60));
    return g;
}

void BM_Tile(benchmark::State& state) {
    const RasterGrid g = random_raster(static_cast<int>(state.range(0)), 1);
    for (auto _ : state) {
        TileSet t = tile(g, 256, 256);
        benchmark::DoNotOptimize(t.patches.data());
    }
}
BENCHMARK(BM_Tile)->Arg(512)->Arg(1024)->Arg(2048);

void BM_TileUntileRoundTrip(benchmark::State& state) {
    const RasterGrid g = random_raster(static_cast<int>(state.range(0)), 2);
    for (auto _ : state) {
        TileSet t = tile(g, 256, 256);
        RasterGrid back = untile(t.patches, t.layout);
        benchmark::DoNotOptimize(back.values().data());
    }
}
BENCHMARK(BM_TileUntileRoundTrip)->Arg(512)->Arg(1024);

void BM_DilateMask(benchmark::State& state) {
    RandomSource rng(3);
    RasterGrid m(1024, 1024, 0.0f);
    m.kind = RasterKind::mask;
    for (auto& v : m.values()) v = rng.uniform() < 0.1 ? 1.0f : 0.0f;
    for (auto _ : state) {
        RasterGrid d = dilate_mask(m, static_cast<int>(state.range(0)));
        benchmark::DoNotOptimize(d.values().data());
    }
}
BENCHMARK(BM_DilateMask)->Arg(1)->Arg(3);

void BM_Normalize(benchmark::State& state) {
    const RasterGrid g = random_raster(1024, 4);
    const NormSpec spec{0.0f, 60.0f, NormSpec::Kind::height};
    for (auto _ : state) {
        RasterGrid n = normalize(g, spec);
        benchmark::DoNotOptimize(n.values().data());
    }
}
BENCHMARK(BM_Normalize);

}  // namespace
