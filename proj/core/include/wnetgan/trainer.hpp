#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "wnetgan/dataset.hpp"
#include "wnetgan/nets.hpp"
#include "wnetgan/objective.hpp"
#include "wnetgan/raster.hpp"

namespace wnetgan::train {

struct TrainConfig {
    int epochs = 200;
    int batch_size = 5;
    double lr_alpha = 0.0002;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    double lambda_l1 = 100.0;
    std::uint64_t seed = 1;
    int checkpoint_every = 50;  // epochs
    int patch_size = 256;
    bool deterministic = false;  // single BLAS thread, reproducible bitwise
    bool augment = true;         // random crops + joint horizontal flips

    nets::GeneratorSpec generator;
    nets::DiscriminatorSpec discriminator;

    void validate() const;

    // JSON round trip for the CLI config file; unknown keys are rejected.
    static TrainConfig from_json_text(const std::string& text);
    static TrainConfig from_json_file(const std::filesystem::path& path);
    std::string to_json_text() const;
};

struct TrainResult {
    std::filesystem::path final_checkpoint;  // .json manifest path
    std::filesystem::path log_path;
    double initial_val_l1 = 0.0;
    double final_val_l1 = 0.0;
    int steps_run = 0;
    int epochs_run = 0;
};

// Minibatch adversarial loop: per batch one discriminator update (generated
// samples detached) followed by one generator update. Writes newline-
// delimited JSON loss records and periodic checkpoints under out_dir.
TrainResult train(const TrainConfig& config,
                  const std::filesystem::path& dataset_manifest,
                  const std::filesystem::path& out_dir);

// Continues a checkpointed run up to config.epochs. In deterministic mode the
// trajectory matches an uninterrupted run. Throws CompatibilityError when the
// configured specs do not match the checkpoint.
TrainResult resume(const std::filesystem::path& checkpoint,
                   const TrainConfig& config,
                   const std::filesystem::path& dataset_manifest,
                   const std::filesystem::path& out_dir);

struct InferResult {
    RasterGrid refined;
    RasterGrid validity;  // mask-kind: 1 where the input DSM carried data
    std::size_t clamped_pixels = 0;
};

// normalize -> tile (stride = patch size) -> generator -> untile ->
// denormalize. Inputs must share shape and GSD.
InferResult infer(const std::filesystem::path& checkpoint, const RasterGrid& dsm,
                  const RasterGrid& pan);

}  // namespace wnetgan::train
