#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "wnetgan/nets.hpp"
#include "wnetgan/raster.hpp"
#include "wnetgan/tensor.hpp"

namespace wnetgan::ckpt {

// Weight checkpoint: a `<base>.wns` tensor container (parameters, optimizer
// moments, batch-norm buffers, RNG stream) plus a `<base>.json` manifest
// carrying the network specs, epoch and normalization so compatibility can
// be validated before the payload is touched.
struct Checkpoint {
    nets::GeneratorSpec generator_spec;
    nets::DiscriminatorSpec discriminator_spec;
    int epoch = 0;
    std::int64_t global_step = 0;
    std::int64_t g_opt_steps = 0;
    std::int64_t d_opt_steps = 0;
    NormSpec height_norm{0.0f, 1.0f, NormSpec::Kind::height};
    NormSpec intensity_norm{0.0f, 1.0f, NormSpec::Kind::intensity};
    std::string rng_state;

    std::vector<std::pair<std::string, nn::Tensor>> tensors;

    const nn::Tensor* find(const std::string& name) const;

    // Writes <base>.json and <base>.wns.
    void save(const std::filesystem::path& base) const;
    // Accepts the .json manifest path (or the base path without extension).
    static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace wnetgan::ckpt
