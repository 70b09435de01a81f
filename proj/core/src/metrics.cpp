#include "wnetgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"
#include "wnetgan/errors.hpp"

namespace wnetgan::metrics {

namespace {

constexpr double kNmadScale = 1.4826;

void require_aligned(const RasterGrid& pred, const RasterGrid& gt,
                     const RasterGrid& mask) {
    if (pred.rows() != gt.rows() || pred.cols() != gt.cols() ||
        pred.rows() != mask.rows() || pred.cols() != mask.cols())
        throw InputError("metrics: rasters are not co-registered (shape mismatch)");
    for (float v : mask.values())
        if (v != 0.0f && v != 1.0f)
            throw InputError("metrics: mask raster is not binary");
}

bool valid_pixel(const RasterGrid& pred, const RasterGrid& gt,
                 const RasterGrid& mask, std::size_t i) {
    return mask.values()[i] == 1.0f && !pred.is_nodata(pred.values()[i]) &&
           !gt.is_nodata(gt.values()[i]);
}

// Pairwise merge so the result does not depend on how the input was chunked
// (stable to ~1e-15 relative under any tiling of the reduction).
double pairwise_sum(std::vector<double>& parts) {
    if (parts.empty()) return 0.0;
    std::size_t n = parts.size();
    while (n > 1) {
        std::size_t half = (n + 1) / 2;
        for (std::size_t i = 0; i + half < n; ++i) parts[i] += parts[i + half];
        n = half;
    }
    return parts[0];
}

// Applies fn(i, delta) per valid pixel, accumulating per-row partial sums.
template <typename Fn>
double reduce_rows(const RasterGrid& pred, const RasterGrid& gt,
                   const RasterGrid& mask, Fn fn) {
    std::vector<double> rows;
    rows.reserve(static_cast<std::size_t>(pred.rows()));
    for (int r = 0; r < pred.rows(); ++r) {
        double acc = 0.0;
        for (int c = 0; c < pred.cols(); ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * pred.cols() + c;
            if (!valid_pixel(pred, gt, mask, i)) continue;
            acc += fn(i);
        }
        rows.push_back(acc);
    }
    return pairwise_sum(rows);
}

std::size_t count_valid(const RasterGrid& pred, const RasterGrid& gt,
                        const RasterGrid& mask) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (valid_pixel(pred, gt, mask, i)) ++n;
    return n;
}

// Lower-upper midpoint for even counts.
double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    auto mid = v.begin() + n / 2;
    std::nth_element(v.begin(), mid, v.end());
    const double upper = *mid;
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

}  // namespace

double mae(const RasterGrid& pred, const RasterGrid& gt, const RasterGrid& mask) {
    require_aligned(pred, gt, mask);
    const std::size_t n = count_valid(pred, gt, mask);
    if (n == 0) throw EvaluationError("mae: empty valid set");
    const double sum = reduce_rows(pred, gt, mask, [&](std::size_t i) {
        return std::abs(static_cast<double>(pred.values()[i]) - gt.values()[i]);
    });
    return sum / static_cast<double>(n);
}

double rmse(const RasterGrid& pred, const RasterGrid& gt, const RasterGrid& mask) {
    require_aligned(pred, gt, mask);
    const std::size_t n = count_valid(pred, gt, mask);
    if (n == 0) throw EvaluationError("rmse: empty valid set");
    const double sum = reduce_rows(pred, gt, mask, [&](std::size_t i) {
        const double d = static_cast<double>(pred.values()[i]) - gt.values()[i];
        return d * d;
    });
    return std::sqrt(sum / static_cast<double>(n));
}

double nmad(const RasterGrid& pred, const RasterGrid& gt, const RasterGrid& mask) {
    require_aligned(pred, gt, mask);
    std::vector<double> delta;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (valid_pixel(pred, gt, mask, i))
            delta.push_back(static_cast<double>(pred.values()[i]) - gt.values()[i]);
    if (delta.empty()) throw EvaluationError("nmad: empty valid set");
    std::vector<double> work = delta;
    const double med = median_inplace(work);
    for (std::size_t i = 0; i < delta.size(); ++i) work[i] = std::abs(delta[i] - med);
    return kNmadScale * median_inplace(work);
}

double ncc(const RasterGrid& pred, const RasterGrid& gt, const RasterGrid& mask) {
    require_aligned(pred, gt, mask);
    const std::size_t n = count_valid(pred, gt, mask);
    if (n == 0) throw EvaluationError("ncc: empty valid set");

    const double sum_p = reduce_rows(pred, gt, mask, [&](std::size_t i) {
        return static_cast<double>(pred.values()[i]);
    });
    const double sum_g = reduce_rows(pred, gt, mask, [&](std::size_t i) {
        return static_cast<double>(gt.values()[i]);
    });
    const double mean_p = sum_p / static_cast<double>(n);
    const double mean_g = sum_g / static_cast<double>(n);

    const double var_p = reduce_rows(pred, gt, mask, [&](std::size_t i) {
        const double d = pred.values()[i] - mean_p;
        return d * d;
    });
    const double var_g = reduce_rows(pred, gt, mask, [&](std::size_t i) {
        const double d = gt.values()[i] - mean_g;
        return d * d;
    });
    if (var_p == 0.0 || var_g == 0.0)
        throw EvaluationError("ncc: zero variance in the masked series");
    const double cov = reduce_rows(pred, gt, mask, [&](std::size_t i) {
        return (pred.values()[i] - mean_p) * (gt.values()[i] - mean_g);
    });
    // Clamp away sub-ulp excursions outside [-1, 1].
    return std::clamp(cov / std::sqrt(var_p * var_g), -1.0, 1.0);
}

MetricsReport::MetricsReport(double mae_v, double rmse_v, double nmad_v, double ncc_v,
                             std::size_t n_px, int dilation_px, std::size_t excluded)
    : mae_m(mae_v),
      rmse_m(rmse_v),
      nmad_m(nmad_v),
      ncc(ncc_v),
      n_pixels(n_px),
      mask_dilation_px(dilation_px),
      excluded_nodata(excluded) {
    if (n_pixels == 0) throw EvaluationError("metrics report over an empty pixel set");
    if (mae_m > rmse_m + 1e-12 * std::max(1.0, rmse_m))
        throw InternalError("metrics violate mae <= rmse");
    if (ncc < -1.0 || ncc > 1.0) throw InternalError("ncc outside [-1, 1]");
}

std::string MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    j["mae_m"] = mae_m;
    j["rmse_m"] = rmse_m;
    j["nmad_m"] = nmad_m;
    j["ncc"] = ncc;
    j["n_pixels"] = n_pixels;
    j["mask_dilation_px"] = mask_dilation_px;
    j["excluded_nodata"] = excluded_nodata;
    return j.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("metrics report: ") + e.what());
    }
    MetricsReport r;
    r.mae_m = j.at("mae_m").get<double>();
    r.rmse_m = j.at("rmse_m").get<double>();
    r.nmad_m = j.at("nmad_m").get<double>();
    r.ncc = j.at("ncc").get<double>();
    r.n_pixels = j.at("n_pixels").get<std::size_t>();
    r.mask_dilation_px = j.at("mask_dilation_px").get<int>();
    r.excluded_nodata = j.at("excluded_nodata").get<std::size_t>();
    return r;
}

MetricsReport evaluate(const RasterGrid& pred, const RasterGrid& gt,
                       const RasterGrid& footprints, int dilation_px) {
    if (pred.rows() != footprints.rows() || pred.cols() != footprints.cols())
        throw InputError("evaluate: footprint mask shape mismatch");
    const RasterGrid mask = dilate_mask(footprints, dilation_px);

    std::size_t in_mask = 0;
    for (float v : mask.values()) in_mask += v == 1.0f;
    if (in_mask == 0) throw EvaluationError("evaluate: dilated mask is empty");
    const std::size_t n_valid = count_valid(pred, gt, mask);
    if (n_valid == 0) throw EvaluationError("evaluate: all masked pixels are nodata");

    return MetricsReport(mae(pred, gt, mask), rmse(pred, gt, mask),
                         nmad(pred, gt, mask), ncc(pred, gt, mask), n_valid,
                         dilation_px, in_mask - n_valid);
}

std::vector<std::pair<double, double>> extract_profile(const RasterGrid& raster,
                                                       const ProfileLine& line) {
    if (line.samples < 2) throw ParameterError("profile needs at least 2 samples");
    auto inside = [&](double x, double y) {
        return x >= 0.0 && x <= raster.cols() - 1.0 && y >= 0.0 &&
               y <= raster.rows() - 1.0;
    };
    if (!inside(line.x0, line.y0) || !inside(line.x1, line.y1))
        throw InputError("profile endpoint outside raster");

    const double dx = line.x1 - line.x0, dy = line.y1 - line.y0;
    const double length_m = std::hypot(dx, dy) * raster.gsd_m;

    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(line.samples));
    for (int s = 0; s < line.samples; ++s) {
        const double t = static_cast<double>(s) / (line.samples - 1);
        const double x = line.x0 + t * dx, y = line.y0 + t * dy;
        const int c0 = static_cast<int>(std::floor(x));
        const int r0 = static_cast<int>(std::floor(y));
        const int c1 = std::min(c0 + 1, raster.cols() - 1);
        const int r1 = std::min(r0 + 1, raster.rows() - 1);
        const double fx = x - c0, fy = y - r0;

        const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
        const float v[4] = {raster.at(r0, c0), raster.at(r0, c1), raster.at(r1, c0),
                            raster.at(r1, c1)};
        double num = 0.0, den = 0.0;
        for (int k = 0; k < 4; ++k) {
            if (raster.is_nodata(v[k])) continue;
            num += w[k] * v[k];
            den += w[k];
        }
        const double h = den > 0.0 ? num / den
                                   : std::numeric_limits<double>::quiet_NaN();
        out.emplace_back(t * length_m, h);
    }
    return out;
}

std::string format_table(
    const std::vector<std::pair<std::string, MetricsReport>>& rows) {
    std::size_t label_w = 10;
    for (const auto& [label, _] : rows) label_w = std::max(label_w, label.size());

    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-*s  %8s  %8s  %8s  %6s\n",
                  static_cast<int>(label_w), "", "MAE, m", "RMSE, m", "NMAD, m", "NCC");
    out += buf;
    for (const auto& [label, r] : rows) {
        std::snprintf(buf, sizeof(buf), "%-*s  %8.2f  %8.2f  %8.2f  %6.2f\n",
                      static_cast<int>(label_w), label.c_str(), r.mae_m, r.rmse_m,
                      r.nmad_m, r.ncc);
        out += buf;
    }
    return out;
}

}  // namespace wnetgan::metrics
