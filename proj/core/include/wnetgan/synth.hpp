#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "wnetgan/raster.hpp"

namespace wnetgan::synth {

enum class RoofType { flat, gable, hip, zigzag };

struct SceneSpec {
    int rows = 256;
    int cols = 256;
    float gsd_m = 0.5f;
    int n_buildings = 12;
    // probabilities over {flat, gable, hip, zigzag-footprint}; must sum to 1
    std::array<double, 4> roof_mix{0.30, 0.30, 0.20, 0.20};
    float height_min_m = 3.0f;   // eave heights
    float height_max_m = 18.0f;
    std::uint64_t seed = 1;
    // fraction of buildings present in the degraded stereo input but absent
    // from ground truth and mask (acquisition-time mismatch emulation)
    float omit_from_gt_rate = 0.0f;

    void validate() const;
};

struct DegradationSpec {
    float noise_sigma_m = 0.8f;   // additive Gaussian height noise
    int smooth_radius_px = 2;     // wall-softening blur radius
    float dropout_rate = 0.0f;    // fraction of pixels set to nodata
    int veg_blob_count = 6;       // raised parabolic canopy bumps
    float veg_height_m = 8.0f;
    std::uint64_t seed = 1;

    void validate() const;
};

struct Building {
    RoofType roof = RoofType::flat;
    int row0 = 0, col0 = 0;   // top-left corner, pixels
    int rows = 0, cols = 0;   // bounding box, pixels
    float eave_m = 0.0f;
    float ridge_rise_m = 0.0f;  // 0 for flat / zigzag
    bool omit_from_gt = false;

    // Height above terrain at a bounding-box pixel; <= 0 outside the footprint.
    float height_at(int r, int c) const;
};

struct Scene {
    RasterGrid gt_dsm;
    RasterGrid footprints;
    // gt plus any buildings omitted from gt (identical to gt_dsm when
    // omit_from_gt_rate is 0); this is what degradation starts from.
    RasterGrid stereo_source;
    std::vector<Building> buildings;  // placements that succeeded
    int n_requested = 0;
};

// Flat zero terrain plus prism buildings with exact roof geometry;
// deterministic given spec.seed. Placement failures after bounded retries
// reduce the building count (recorded via buildings.size()).
Scene generate_scene(const SceneSpec& spec);

// Blur -> Gaussian noise -> vegetation blobs -> nodata dropout, in that
// order; deterministic given spec.seed.
RasterGrid degrade_to_stereo_dsm(const RasterGrid& gt_dsm, const DegradationSpec& spec,
                                 const std::vector<Building>* buildings = nullptr);

// Lambertian hillshade of the ground-truth surface plus per-building albedo
// variation, scaled to [0, 1]. Azimuth clockwise from north (-row), degrees.
RasterGrid render_pan(const RasterGrid& gt_dsm, double sun_azimuth_deg,
                      double sun_elevation_deg, double albedo_noise);

// Whole-dataset recipe: per-scene seeds are scene.seed + index and
// degrade.seed + index; scenes are split train/val/test 80/10/10 by id.
struct DatasetSpec {
    SceneSpec scene;
    DegradationSpec degrade;
    double sun_azimuth_deg = 135.0;
    double sun_elevation_deg = 40.0;
    double albedo_noise = 0.35;
    int count = 16;

    void validate() const;
    static DatasetSpec from_json_file(const std::filesystem::path& path);
    std::string to_json_text() const;
};

}  // namespace wnetgan::synth

namespace wnetgan::data {
struct DatasetManifest;
}

namespace wnetgan::synth {

// Generates `count` scenes (gt/stereo/pan/mask as .r32), derives the global
// height normalization from the data, and writes `dataset.json` in out_dir.
data::DatasetManifest build_dataset(const DatasetSpec& spec,
                                    const std::filesystem::path& out_dir);

}  // namespace wnetgan::synth
