#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "wnetgan/raster.hpp"

namespace wnetgan::metrics {

// Masked accuracy report. NMAD is 1.4826 * median(|d - median(d)|); NCC is
// the Pearson correlation of heights over the valid masked set.
struct MetricsReport {
    double mae_m = 0.0;
    double rmse_m = 0.0;
    double nmad_m = 0.0;
    double ncc = 0.0;
    std::size_t n_pixels = 0;
    int mask_dilation_px = 0;
    std::size_t excluded_nodata = 0;

    MetricsReport() = default;
    MetricsReport(double mae, double rmse, double nmad, double ncc_v,
                  std::size_t n_px, int dilation_px, std::size_t excluded);

    std::string to_json() const;
    static MetricsReport from_json(const std::string& text);
};

double mae(const RasterGrid& pred, const RasterGrid& gt, const RasterGrid& mask);
double rmse(const RasterGrid& pred, const RasterGrid& gt, const RasterGrid& mask);
double nmad(const RasterGrid& pred, const RasterGrid& gt, const RasterGrid& mask);
double ncc(const RasterGrid& pred, const RasterGrid& gt, const RasterGrid& mask);

// Dilates the footprints by dilation_px (square element) and computes all
// four metrics inside the dilated mask; nodata pixels of either raster are
// excluded from the valid set and counted.
MetricsReport evaluate(const RasterGrid& pred, const RasterGrid& gt,
                       const RasterGrid& footprints, int dilation_px = 3);

// Sampling line in pixel coordinates (x = column, y = row), both endpoints
// inside the raster.
struct ProfileLine {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    int samples = 2;
};

// Bilinear interpolation at `samples` evenly spaced points; distances in
// meters along the line via the raster's gsd.
std::vector<std::pair<double, double>> extract_profile(const RasterGrid& raster,
                                                       const ProfileLine& line);

// Aligned text table, one row per labelled report, MAE / RMSE / NMAD / NCC
// column order.
std::string format_table(
    const std::vector<std::pair<std::string, MetricsReport>>& rows);

// Accuracy reference for the Berlin WorldView-1 study this architecture was
// introduced on. Not reproducible here (that stereo DSM and its CityGML
// ground truth are proprietary); kept as documentation constants and to pin
// the table layout.
struct ReferenceRow {
    const char* label;
    double mae, rmse, nmad, ncc;
};
inline constexpr ReferenceRow kBerlinReference[3] = {
    {"Stereo DSM", 3.00, 5.97, 1.48, 0.90},
    {"cGAN", 2.01, 4.78, 0.86, 0.92},
    {"Fused-cGAN", 1.79, 4.36, 0.67, 0.94},
};

}  // namespace wnetgan::metrics
