#include "wnetgan/raster.hpp"

#include <algorithm>
#include <cmath>

#include "wnetgan/errors.hpp"

namespace wnetgan {

std::string to_string(RasterKind k) {
    switch (k) {
        case RasterKind::dsm: return "dsm";
        case RasterKind::pan: return "pan";
        case RasterKind::mask: return "mask";
    }
    return "dsm";
}

RasterKind raster_kind_from_string(const std::string& s) {
    if (s == "dsm") return RasterKind::dsm;
    if (s == "pan") return RasterKind::pan;
    if (s == "mask") return RasterKind::mask;
    throw FormatError("unknown raster kind: '" + s + "'");
}

RasterGrid::RasterGrid(int rows, int cols, float fill)
    : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1) {
        throw ParameterError("raster dimensions must be >= 1, got " +
                             std::to_string(rows) + "x" + std::to_string(cols));
    }
    values_.assign(static_cast<std::size_t>(rows) * cols, fill);
}

bool RasterGrid::has_nodata_pixels() const {
    if (!nodata) return false;
    for (float v : values_)
        if (v == *nodata) return true;
    return false;
}

void RasterGrid::validate() const {
    if (rows_ < 1 || cols_ < 1) throw InputError("empty raster");
    if (!(gsd_m > 0.0f)) throw InputError("gsd_m must be > 0");
    if (kind == RasterKind::mask) {
        if (nodata) throw InputError("nodata is forbidden in mask rasters");
        for (float v : values_) {
            if (v != 0.0f && v != 1.0f)
                throw InputError("mask raster contains a value other than {0,1}");
        }
        return;
    }
    for (float v : values_) {
        if (!std::isfinite(v) && !is_nodata(v))
            throw InputError("raster contains a non-finite value that is not the nodata sentinel");
    }
}

void NormSpec::validate() const {
    if (!(h_max > h_min))
        throw ParameterError("degenerate NormSpec: h_max must exceed h_min");
}

RasterGrid normalize(const RasterGrid& raster, const NormSpec& spec) {
    spec.validate();
    RasterGrid out = raster;
    const double span = static_cast<double>(spec.h_max) - spec.h_min;
    for (float& v : out.values()) {
        if (raster.is_nodata(v)) {
            v = -1.0f;
            continue;
        }
        double t = 2.0 * (static_cast<double>(v) - spec.h_min) / span - 1.0;
        v = static_cast<float>(std::clamp(t, -1.0, 1.0));
    }
    out.nodata.reset();
    return out;
}

RasterGrid denormalize(const RasterGrid& raster, const NormSpec& spec,
                       std::size_t* clamped_count) {
    spec.validate();
    RasterGrid out = raster;
    const double span = static_cast<double>(spec.h_max) - spec.h_min;
    std::size_t clamped = 0;
    for (float& v : out.values()) {
        double t = v;
        if (t < -1.0 || t > 1.0) {
            ++clamped;
            t = std::clamp(t, -1.0, 1.0);
        }
        v = static_cast<float>(spec.h_min + (t + 1.0) * 0.5 * span);
    }
    if (clamped_count) *clamped_count = clamped;
    return out;
}

namespace {

// Symmetric reflection (edge pixel repeated), folded so any pad width works
// even when it exceeds the raster size.
int fold_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}

int axis_tiles(int dim, int tile_size, int stride) {
    if (dim <= tile_size) return 1;
    return (dim - tile_size + stride - 1) / stride + 1;
}

}  // namespace

TileSet tile(const RasterGrid& raster, int tile_size, int stride) {
    if (tile_size < 1) throw ParameterError("tile_size must be >= 1");
    if (stride < 1 || stride > tile_size)
        throw ParameterError("stride must satisfy 1 <= stride <= tile_size");

    const int rows = raster.rows(), cols = raster.cols();
    TileLayout layout;
    layout.tile_size = tile_size;
    layout.stride = stride;
    layout.grid_rows = axis_tiles(rows, tile_size, stride);
    layout.grid_cols = axis_tiles(cols, tile_size, stride);
    const int padded_rows = (layout.grid_rows - 1) * stride + tile_size;
    const int padded_cols = (layout.grid_cols - 1) * stride + tile_size;
    layout.pad_rows = padded_rows - rows;
    layout.pad_cols = padded_cols - cols;
    layout.src_rows = rows;
    layout.src_cols = cols;
    layout.gsd_m = raster.gsd_m;
    layout.origin_x = raster.origin_x;
    layout.origin_y = raster.origin_y;
    layout.nodata = raster.nodata;
    layout.kind = raster.kind;
    if (tile_size > padded_rows || tile_size > padded_cols)
        throw ParameterError("tile_size exceeds padded raster");  // unreachable by construction

    TileSet set;
    set.layout = layout;
    set.patches.reserve(static_cast<std::size_t>(layout.n_tiles()));
    for (int tr = 0; tr < layout.grid_rows; ++tr) {
        for (int tc = 0; tc < layout.grid_cols; ++tc) {
            RasterGrid patch(tile_size, tile_size);
            patch.gsd_m = raster.gsd_m;
            patch.origin_x = raster.origin_x + static_cast<double>(tc) * stride * raster.gsd_m;
            patch.origin_y = raster.origin_y + static_cast<double>(tr) * stride * raster.gsd_m;
            patch.nodata = raster.nodata;
            patch.kind = raster.kind;
            for (int r = 0; r < tile_size; ++r) {
                const int sr = fold_index(tr * stride + r, rows);
                for (int c = 0; c < tile_size; ++c) {
                    const int sc = fold_index(tc * stride + c, cols);
                    patch.at(r, c) = raster.at(sr, sc);
                }
            }
            set.patches.push_back(std::move(patch));
        }
    }
    return set;
}

RasterGrid untile(const std::vector<RasterGrid>& patches, const TileLayout& layout) {
    if (static_cast<int>(patches.size()) != layout.n_tiles())
        throw ParameterError("patch count " + std::to_string(patches.size()) +
                             " does not match layout grid " + std::to_string(layout.n_tiles()));
    if (layout.n_tiles() == 0) throw ParameterError("empty tile layout");
    for (const auto& p : patches) {
        if (p.rows() != layout.tile_size || p.cols() != layout.tile_size)
            throw ParameterError("patch size does not match layout tile_size");
    }

    const int padded_rows = (layout.grid_rows - 1) * layout.stride + layout.tile_size;
    const int padded_cols = (layout.grid_cols - 1) * layout.stride + layout.tile_size;
    std::vector<double> acc(static_cast<std::size_t>(padded_rows) * padded_cols, 0.0);
    std::vector<std::uint32_t> weight(acc.size(), 0);

    for (int tr = 0; tr < layout.grid_rows; ++tr) {
        for (int tc = 0; tc < layout.grid_cols; ++tc) {
            const RasterGrid& patch =
                patches[static_cast<std::size_t>(tr) * layout.grid_cols + tc];
            for (int r = 0; r < layout.tile_size; ++r) {
                const std::size_t row_off =
                    static_cast<std::size_t>(tr * layout.stride + r) * padded_cols +
                    tc * layout.stride;
                for (int c = 0; c < layout.tile_size; ++c) {
                    acc[row_off + c] += patch.at(r, c);
                    ++weight[row_off + c];
                }
            }
        }
    }

    RasterGrid out(layout.src_rows, layout.src_cols);
    out.gsd_m = layout.gsd_m;
    out.origin_x = layout.origin_x;
    out.origin_y = layout.origin_y;
    out.nodata = layout.nodata;
    out.kind = layout.kind;
    for (int r = 0; r < layout.src_rows; ++r) {
        for (int c = 0; c < layout.src_cols; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * padded_cols + c;
            out.at(r, c) = static_cast<float>(acc[i] / weight[i]);
        }
    }
    return out;
}

RasterGrid dilate_mask(const RasterGrid& mask, int radius) {
    if (radius < 0) throw ParameterError("dilation radius must be >= 0");
    for (float v : mask.values()) {
        if (v != 0.0f && v != 1.0f)
            throw ParameterError("dilate_mask requires a binary {0,1} raster");
    }
    if (radius == 0) return mask;

    const int rows = mask.rows(), cols = mask.cols();
    // Separable: the Chebyshev ball is a square, so a horizontal max filter
    // followed by a vertical one is exact.
    RasterGrid horiz = mask;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            float v = 0.0f;
            const int lo = std::max(0, c - radius), hi = std::min(cols - 1, c + radius);
            for (int k = lo; k <= hi && v == 0.0f; ++k) v = mask.at(r, k);
            horiz.at(r, c) = v;
        }
    }
    RasterGrid out = horiz;
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) {
            float v = 0.0f;
            const int lo = std::max(0, r - radius), hi = std::min(rows - 1, r + radius);
            for (int k = lo; k <= hi && v == 0.0f; ++k) v = horiz.at(k, c);
            out.at(r, c) = v;
        }
    }
    return out;
}

}  // namespace wnetgan
