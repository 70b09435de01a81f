#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wnetgan/raster.hpp"
#include "wnetgan/tensor.hpp"

namespace wnetgan::data {

struct ScenePaths {
    int id = 0;
    std::string gt, stereo, pan, mask;  // relative to the manifest directory
    int n_buildings = -1;               // placed count; -1 when unknown
};

// dataset.json: global normalization specs, 80/10/10 splits and per-scene
// raster paths.
struct DatasetManifest {
    float gsd_m = 0.5f;
    NormSpec height_norm{0.0f, 1.0f, NormSpec::Kind::height};
    NormSpec intensity_norm{0.0f, 1.0f, NormSpec::Kind::intensity};
    std::vector<int> train_ids, val_ids, test_ids;
    std::vector<ScenePaths> scenes;
    std::filesystem::path root;  // directory containing the manifest

    const ScenePaths& scene(int id) const;

    static DatasetManifest load(const std::filesystem::path& manifest_path);
    void save(const std::filesystem::path& manifest_path) const;
};

struct SceneRasters {
    RasterGrid gt, stereo, pan, mask;
};

SceneRasters load_scene(const DatasetManifest& manifest, int id);

// Aligned normalized training triple plus validity mask, each (1,1,P,P).
struct PatchSample {
    nn::Tensor stereo;  // I1, height-normalized
    nn::Tensor pan;     // I2, intensity-normalized
    nn::Tensor gt;      // height-normalized ground truth
    nn::Tensor valid;   // 1 where both stereo and gt carry data
};

// Crops a patch at (row_off, col_off), optionally mirrored horizontally
// (jointly across all four rasters), and normalizes into tanh range.
PatchSample make_patch(const SceneRasters& scene, const DatasetManifest& manifest,
                       int patch_size, int row_off, int col_off, bool hflip);

// Stacks samples into batch tensors (B,1,P,P) in the given order.
struct Batch {
    nn::Tensor stereo, pan, gt, valid;
};
Batch stack_batch(const std::vector<PatchSample>& samples);

}  // namespace wnetgan::data
