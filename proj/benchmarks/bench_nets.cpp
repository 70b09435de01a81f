#include <benchmark/benchmark.h>

#include "wnetgan/nets.hpp"
#include "wnetgan/objective.hpp"
#include "wnetgan/rng.hpp"

using namespace wnetgan;
using nn::Shape4;
using nn::Tensor;

namespace {

Tensor random_patch(int batch, int size, RandomSource& rng) {
    Tensor t(Shape4{batch, 1, size, size});
    for (auto& v : t.vec()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

void BM_GeneratorForward(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    nets::GeneratorSpec spec;
    spec.in_size = size;
    spec.n_levels = size == 256 ? 8 : 6;
    spec.base_width = static_cast<int>(state.range(1));
    spec.fusion_width = spec.base_width;
    RandomSource rng(1);
    auto g = nets::build_generator(spec, rng);
    RandomSource data_rng(2);
    const Tensor dsm = random_patch(1, size, data_rng);
    const Tensor pan = random_patch(1, size, data_rng);
    for (auto _ : state) {
        auto out = g->forward(nn::constant(dsm), nn::constant(pan), false, nullptr);
        benchmark::DoNotOptimize(out->value.data());
    }
}
BENCHMARK(BM_GeneratorForward)->Args({64, 16})->Args({64, 32})->Args({256, 64})
    ->Unit(benchmark::kMillisecond);

void BM_DiscriminatorForward(benchmark::State& state) {
    nets::DiscriminatorSpec spec;
    RandomSource rng(3);
    nets::PatchDiscriminator d(spec, rng);
    RandomSource data_rng(4);
    const Tensor dsm = random_patch(1, 256, data_rng);
    const Tensor cand = random_patch(1, 256, data_rng);
    for (auto _ : state) {
        auto out = d.forward(nn::constant(dsm), nn::constant(cand), false);
        benchmark::DoNotOptimize(out->value.data());
    }
}
BENCHMARK(BM_DiscriminatorForward)->Unit(benchmark::kMillisecond);

void BM_GeneratorTrainStep(benchmark::State& state) {
    nets::GeneratorSpec spec;
    spec.in_size = 64;
    spec.n_levels = 6;
    spec.base_width = static_cast<int>(state.range(0));
    spec.fusion_width = spec.base_width;
    RandomSource rng(5);
    auto g = nets::build_generator(spec, rng);
    RandomSource data_rng(6), dropout_rng(7);
    const Tensor dsm = random_patch(5, 64, data_rng);
    const Tensor pan = random_patch(5, 64, data_rng);
    const Tensor gt = random_patch(5, 64, data_rng);
    objective::LossWeights w;
    nets::ParamList params;
    g->collect(params);
    for (auto _ : state) {
        for (auto& [name, p] : params.params) p->zero_grad();
        auto fake = g->forward(nn::constant(dsm), nn::constant(pan), true, &dropout_rng);
        auto loss = objective::l1_loss_node(fake, nn::constant(gt), nullptr);
        nn::backward(loss);
        benchmark::DoNotOptimize(loss->value.data());
    }
}
BENCHMARK(BM_GeneratorTrainStep)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
