#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wnetgan {

enum class RasterKind { dsm, pan, mask };

std::string to_string(RasterKind k);
RasterKind raster_kind_from_string(const std::string& s);

// Single-band 2D float field. Heights in meters for DSMs, unitless
// reflectance in [0,1] for PAN, {0,1} for masks. Row-major storage.
class RasterGrid {
public:
    RasterGrid() = default;
    RasterGrid(int rows, int cols, float fill = 0.0f);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }

    float& at(int r, int c) { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
    float at(int r, int c) const { return values_[static_cast<std::size_t>(r) * cols_ + c]; }

    std::vector<float>& values() { return values_; }
    const std::vector<float>& values() const { return values_; }

    bool is_nodata(float v) const { return nodata.has_value() && v == *nodata; }
    bool has_nodata_pixels() const;

    // Throws InputError when a type invariant is violated (empty grid,
    // non-positive gsd, non-binary mask, non-finite value that is not the
    // nodata sentinel).
    void validate() const;

    float gsd_m = 0.5f;
    double origin_x = 0.0;
    double origin_y = 0.0;
    std::optional<float> nodata;
    RasterKind kind = RasterKind::dsm;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<float> values_;
};

// Affine map between physical units and the generator's tanh range [-1, 1].
struct NormSpec {
    float h_min = 0.0f;
    float h_max = 1.0f;
    enum class Kind { height, intensity } kind = Kind::height;

    void validate() const;  // ParameterError when h_max <= h_min
};

// v -> 2*(v - h_min)/(h_max - h_min) - 1, clamped to [-1, 1].
// Nodata pixels map to -1; the result carries no nodata sentinel.
RasterGrid normalize(const RasterGrid& raster, const NormSpec& spec);

// Inverse affine map. Inputs outside [-1, 1] are clamped; the number of
// clamped pixels is reported through `clamped_count` when non-null.
RasterGrid denormalize(const RasterGrid& raster, const NormSpec& spec,
                       std::size_t* clamped_count = nullptr);

struct TileLayout {
    int tile_size = 256;
    int stride = 256;
    int pad_rows = 0;   // symmetric-reflect padding appended at bottom
    int pad_cols = 0;   // and at right
    int grid_rows = 0;  // tile counts per axis
    int grid_cols = 0;

    // Metadata of the raster that was tiled, so untile can restore it.
    int src_rows = 0;
    int src_cols = 0;
    float gsd_m = 0.5f;
    double origin_x = 0.0;
    double origin_y = 0.0;
    std::optional<float> nodata;
    RasterKind kind = RasterKind::dsm;

    int n_tiles() const { return grid_rows * grid_cols; }
};

struct TileSet {
    std::vector<RasterGrid> patches;  // row-major tile order
    TileLayout layout;
};

// Pads the raster (symmetric reflection, repeated fold for pads larger than
// the raster) to the smallest size covered by the stride grid and cuts
// tile_size x tile_size patches. Requires 1 <= stride <= tile_size.
TileSet tile(const RasterGrid& raster, int tile_size, int stride);

// Reassembles patches; overlapping pixels are averaged with uniform weights,
// padding is cropped. Exact inverse of tile() when stride == tile_size.
RasterGrid untile(const std::vector<RasterGrid>& patches, const TileLayout& layout);

// Binary dilation with a square (Chebyshev) structuring element: output is 1
// iff an input 1-pixel lies within Chebyshev distance <= radius.
RasterGrid dilate_mask(const RasterGrid& mask, int radius);

// --- Canonical `.r32` + JSON sidecar I/O (bit-exact contract) ---
//
// Payload: little-endian IEEE-754 float32, row-major. Sidecar `<name>.json`:
// {rows, cols, gsd_m, origin_x, origin_y, nodata (nullable), kind}.
// `load_raster` also accepts single-band uncompressed GeoTIFF (read-only).

RasterGrid load_raster(const std::filesystem::path& path);
void write_raster(const RasterGrid& raster, const std::filesystem::path& path);

// GeoTIFF ingestion adapter (strip-organized, uncompressed, single band).
RasterGrid load_geotiff(const std::filesystem::path& path);

}  // namespace wnetgan
