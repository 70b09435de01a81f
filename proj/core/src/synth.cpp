#include "wnetgan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "json.hpp"
#include "wnetgan/dataset.hpp"
#include "wnetgan/errors.hpp"
#include "wnetgan/rng.hpp"

namespace wnetgan::synth {

namespace {

constexpr float kNodataSentinel = -9999.0f;

RoofType pick_roof(const std::array<double, 4>& mix, RandomSource& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) {
        acc += mix[i];
        if (u < acc) return static_cast<RoofType>(i);
    }
    return RoofType::zigzag;
}

// Zigzag footprints are a three-band staircase over the bounding box; band
// membership decides whether a pixel belongs to the building.
bool in_zigzag(const Building& b, int r, int c) {
    const bool tall = b.rows >= b.cols;
    const int along = tall ? r - b.row0 : c - b.col0;
    const int across = tall ? c - b.col0 : r - b.row0;
    const int n_along = tall ? b.rows : b.cols;
    const int n_across = tall ? b.cols : b.rows;
    const int band = std::min(2, along * 3 / std::max(1, n_along));
    const int shift = band * n_across / 4;
    const int width = n_across - n_across / 2;  // ceil(n/2)
    return across >= shift && across < shift + width;
}

}  // namespace

float Building::height_at(int r, int c) const {
    if (r < row0 || r >= row0 + rows || c < col0 || c >= col0 + cols) return 0.0f;
    switch (roof) {
        case RoofType::flat:
            return eave_m;
        case RoofType::zigzag:
            return in_zigzag(*this, r, c) ? eave_m : 0.0f;
        case RoofType::gable: {
            // Ridge along the long axis; triangle profile across the short one.
            const bool ridge_along_rows = rows >= cols;
            const double across = ridge_along_rows ? c - col0 : r - row0;
            const double extent = ridge_along_rows ? cols - 1 : rows - 1;
            if (extent <= 0.0) return eave_m + ridge_rise_m;
            const double t = std::abs(across - extent / 2.0) / (extent / 2.0);
            return eave_m + ridge_rise_m * static_cast<float>(1.0 - t);
        }
        case RoofType::hip: {
            const double d_edge = std::min(std::min<double>(r - row0, row0 + rows - 1 - r),
                                           std::min<double>(c - col0, col0 + cols - 1 - c));
            const double half_short = (std::min(rows, cols) - 1) / 2.0;
            if (half_short <= 0.0) return eave_m + ridge_rise_m;
            const double rise = ridge_rise_m * std::min(1.0, d_edge / half_short);
            return eave_m + static_cast<float>(rise);
        }
    }
    return 0.0f;
}

void SceneSpec::validate() const {
    if (rows < 1 || cols < 1) throw ParameterError("scene dimensions must be >= 1");
    if (!(gsd_m > 0.0f)) throw ParameterError("gsd_m must be > 0");
    if (n_buildings < 0) throw ParameterError("n_buildings must be >= 0");
    double sum = 0.0;
    for (double p : roof_mix) {
        if (p < 0.0) throw ParameterError("roof_mix probabilities must be >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ParameterError("roof_mix probabilities must sum to 1");
    if (!(height_max_m >= height_min_m) || height_min_m <= 0.0f)
        throw ParameterError("height_range must be positive with max >= min");
    if (omit_from_gt_rate < 0.0f || omit_from_gt_rate > 1.0f)
        throw ParameterError("omit_from_gt_rate must be in [0, 1]");
}

void DegradationSpec::validate() const {
    if (noise_sigma_m < 0.0f) throw ParameterError("noise_sigma_m must be >= 0");
    if (smooth_radius_px < 0) throw ParameterError("smooth_radius_px must be >= 0");
    if (dropout_rate < 0.0f || dropout_rate >= 1.0f)
        throw ParameterError("dropout_rate must lie in [0, 1)");
    if (veg_blob_count < 0) throw ParameterError("veg_blob_count must be >= 0");
    if (veg_height_m < 0.0f) throw ParameterError("veg_height_m must be >= 0");
}

Scene generate_scene(const SceneSpec& spec) {
    spec.validate();
    RandomSource rng(spec.seed);

    Scene scene;
    scene.n_requested = spec.n_buildings;
    scene.gt_dsm = RasterGrid(spec.rows, spec.cols, 0.0f);
    scene.gt_dsm.gsd_m = spec.gsd_m;
    scene.gt_dsm.kind = RasterKind::dsm;
    scene.footprints = RasterGrid(spec.rows, spec.cols, 0.0f);
    scene.footprints.gsd_m = spec.gsd_m;
    scene.footprints.kind = RasterKind::mask;

    // Footprint sizes scale with the scene but stay in a sane building range.
    const int short_cap = std::max(6, std::min(spec.rows, spec.cols) / 3);
    const int size_min = std::min(6, short_cap);
    const int gap_px = 2;

    std::vector<Building> placed;
    RasterGrid occupied(spec.rows, spec.cols, 0.0f);  // includes spacing margin
    int retries = 20 * std::max(1, spec.n_buildings);

    while (static_cast<int>(placed.size()) < spec.n_buildings && retries-- > 0) {
        Building b;
        b.roof = pick_roof(spec.roof_mix, rng);
        b.rows = rng.uniform_int(size_min, short_cap);
        b.cols = rng.uniform_int(size_min, short_cap);
        if (b.roof == RoofType::gable || b.roof == RoofType::hip) {
            // elongate so the ridge is meaningful
            if (b.rows >= b.cols)
                b.rows = std::min(spec.rows - 2, b.rows + b.cols / 2);
            else
                b.cols = std::min(spec.cols - 2, b.cols + b.rows / 2);
        }
        if (b.rows + 2 > spec.rows || b.cols + 2 > spec.cols) continue;
        b.row0 = rng.uniform_int(1, spec.rows - b.rows - 1);
        b.col0 = rng.uniform_int(1, spec.cols - b.cols - 1);
        b.eave_m = static_cast<float>(rng.uniform(spec.height_min_m, spec.height_max_m));
        b.ridge_rise_m = (b.roof == RoofType::gable || b.roof == RoofType::hip)
                             ? static_cast<float>(rng.uniform(2.0, 6.0))
                             : 0.0f;
        b.omit_from_gt = spec.omit_from_gt_rate > 0.0f &&
                         rng.uniform() < spec.omit_from_gt_rate;

        bool collides = false;
        for (int r = std::max(0, b.row0 - gap_px);
             r < std::min(spec.rows, b.row0 + b.rows + gap_px) && !collides; ++r)
            for (int c = std::max(0, b.col0 - gap_px);
                 c < std::min(spec.cols, b.col0 + b.cols + gap_px); ++c)
                if (occupied.at(r, c) != 0.0f) {
                    collides = true;
                    break;
                }
        if (collides) continue;

        for (int r = b.row0; r < b.row0 + b.rows; ++r)
            for (int c = b.col0; c < b.col0 + b.cols; ++c) occupied.at(r, c) = 1.0f;
        placed.push_back(b);
    }

    scene.stereo_source = scene.gt_dsm;
    for (const Building& b : placed) {
        for (int r = b.row0; r < b.row0 + b.rows; ++r) {
            for (int c = b.col0; c < b.col0 + b.cols; ++c) {
                const float h = b.height_at(r, c);
                if (h <= 0.0f) continue;
                scene.stereo_source.at(r, c) = std::max(scene.stereo_source.at(r, c), h);
                if (b.omit_from_gt) continue;
                scene.gt_dsm.at(r, c) = std::max(scene.gt_dsm.at(r, c), h);
                scene.footprints.at(r, c) = 1.0f;
            }
        }
    }
    scene.buildings = std::move(placed);
    return scene;
}

namespace {

// Separable box blur, radius r, double accumulation. Radius 0 is identity.
RasterGrid box_blur(const RasterGrid& in, int radius) {
    if (radius == 0) return in;
    const int rows = in.rows(), cols = in.cols();
    RasterGrid horiz = in;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int lo = std::max(0, c - radius), hi = std::min(cols - 1, c + radius);
            double acc = 0.0;
            for (int k = lo; k <= hi; ++k) acc += in.at(r, k);
            horiz.at(r, c) = static_cast<float>(acc / (hi - lo + 1));
        }
    }
    RasterGrid out = horiz;
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) {
            const int lo = std::max(0, r - radius), hi = std::min(rows - 1, r + radius);
            double acc = 0.0;
            for (int k = lo; k <= hi; ++k) acc += horiz.at(k, c);
            out.at(r, c) = static_cast<float>(acc / (hi - lo + 1));
        }
    }
    return out;
}

}  // namespace

RasterGrid degrade_to_stereo_dsm(const RasterGrid& gt_dsm, const DegradationSpec& spec,
                                 const std::vector<Building>* buildings) {
    spec.validate();
    if (gt_dsm.kind != RasterKind::dsm)
        throw InputError("degrade_to_stereo_dsm expects a dsm-kind raster");
    RandomSource rng(spec.seed);
    const int rows = gt_dsm.rows(), cols = gt_dsm.cols();

    RasterGrid out = box_blur(gt_dsm, spec.smooth_radius_px);

    if (spec.noise_sigma_m > 0.0f) {
        for (auto& v : out.values())
            v += static_cast<float>(rng.normal(0.0, spec.noise_sigma_m));
    }

    for (int blob = 0; blob < spec.veg_blob_count; ++blob) {
        const int radius = rng.uniform_int(3, 8);
        int cr, cc;
        // Half the canopies hug a building edge (trees overhang roofs there),
        // the rest are scattered.
        if (buildings && !buildings->empty() && rng.uniform() < 0.5) {
            const Building& b =
                (*buildings)[static_cast<std::size_t>(rng.uniform_int(
                    0, static_cast<int>(buildings->size()) - 1))];
            const int side = rng.uniform_int(0, 3);
            switch (side) {
                case 0: cr = b.row0; cc = rng.uniform_int(b.col0, b.col0 + b.cols - 1); break;
                case 1: cr = b.row0 + b.rows - 1; cc = rng.uniform_int(b.col0, b.col0 + b.cols - 1); break;
                case 2: cr = rng.uniform_int(b.row0, b.row0 + b.rows - 1); cc = b.col0; break;
                default: cr = rng.uniform_int(b.row0, b.row0 + b.rows - 1); cc = b.col0 + b.cols - 1; break;
            }
            cr += rng.uniform_int(-radius / 2, radius / 2);
            cc += rng.uniform_int(-radius / 2, radius / 2);
        } else {
            cr = rng.uniform_int(0, rows - 1);
            cc = rng.uniform_int(0, cols - 1);
        }
        const float peak =
            spec.veg_height_m * static_cast<float>(rng.uniform(0.6, 1.0));
        for (int r = std::max(0, cr - radius); r <= std::min(rows - 1, cr + radius); ++r) {
            for (int c = std::max(0, cc - radius); c <= std::min(cols - 1, cc + radius); ++c) {
                const double d2 = static_cast<double>(r - cr) * (r - cr) +
                                  static_cast<double>(c - cc) * (c - cc);
                const double cap = peak * (1.0 - d2 / (static_cast<double>(radius) * radius));
                if (cap > 0.0)
                    out.at(r, c) = std::max(out.at(r, c), static_cast<float>(cap));
            }
        }
    }

    if (spec.dropout_rate > 0.0f) {
        out.nodata = kNodataSentinel;
        for (auto& v : out.values())
            if (rng.uniform() < spec.dropout_rate) v = kNodataSentinel;
    }
    return out;
}

RasterGrid render_pan(const RasterGrid& gt_dsm, double sun_azimuth_deg,
                      double sun_elevation_deg, double albedo_noise) {
    if (!(sun_elevation_deg > 0.0 && sun_elevation_deg <= 90.0))
        throw ParameterError("sun elevation must lie in (0, 90] degrees");
    if (albedo_noise < 0.0 || albedo_noise > 1.0)
        throw ParameterError("albedo_noise must lie in [0, 1]");

    const int rows = gt_dsm.rows(), cols = gt_dsm.cols();
    const double az = sun_azimuth_deg * std::numbers::pi / 180.0;
    const double el = sun_elevation_deg * std::numbers::pi / 180.0;
    // x = +col (east), y = +row (south); azimuth measured clockwise from north
    const double lx = std::cos(el) * std::sin(az);
    const double ly = -std::cos(el) * std::cos(az);
    const double lz = std::sin(el);

    // Per-building albedo from connected components of gt > 0; keyed by a
    // deterministic hash of the component index so no RNG state is needed.
    std::vector<int> comp(static_cast<std::size_t>(rows) * cols, 0);
    int n_comp = 0;
    {
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < gt_dsm.size(); ++i) {
            if (gt_dsm.values()[i] <= 0.0f || comp[i] != 0) continue;
            ++n_comp;
            stack.push_back(i);
            comp[i] = n_comp;
            while (!stack.empty()) {
                const std::size_t p = stack.back();
                stack.pop_back();
                const int r = static_cast<int>(p) / cols, c = static_cast<int>(p) % cols;
                const int nb[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
                for (auto& [nr, nc] : nb) {
                    if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
                    const std::size_t q = static_cast<std::size_t>(nr) * cols + nc;
                    if (gt_dsm.values()[q] > 0.0f && comp[q] == 0) {
                        comp[q] = n_comp;
                        stack.push_back(q);
                    }
                }
            }
        }
    }
    auto albedo_of = [&](int component) {
        if (component == 0 || albedo_noise == 0.0) return 1.0;
        const double phi = 0.6180339887498949;
        double frac = component * phi;
        frac -= std::floor(frac);
        return 1.0 - albedo_noise * frac;
    };

    RasterGrid out(rows, cols, 0.0f);
    out.gsd_m = gt_dsm.gsd_m;
    out.origin_x = gt_dsm.origin_x;
    out.origin_y = gt_dsm.origin_y;
    out.kind = RasterKind::pan;
    const double gsd = gt_dsm.gsd_m;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int c_lo = std::max(0, c - 1), c_hi = std::min(cols - 1, c + 1);
            const int r_lo = std::max(0, r - 1), r_hi = std::min(rows - 1, r + 1);
            const double p = (gt_dsm.at(r, c_hi) - gt_dsm.at(r, c_lo)) / ((c_hi - c_lo) * gsd);
            const double q = (gt_dsm.at(r_hi, c) - gt_dsm.at(r_lo, c)) / ((r_hi - r_lo) * gsd);
            const double norm = std::sqrt(p * p + q * q + 1.0);
            const double shade = std::max(0.0, (-p * lx - q * ly + lz) / norm);
            const double value =
                shade * albedo_of(comp[static_cast<std::size_t>(r) * cols + c]);
            out.at(r, c) = static_cast<float>(std::clamp(value, 0.0, 1.0));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// dataset builder
// ---------------------------------------------------------------------------

void DatasetSpec::validate() const {
    scene.validate();
    degrade.validate();
    if (count < 0) throw ParameterError("dataset count must be >= 0");
    if (!(sun_elevation_deg > 0.0 && sun_elevation_deg <= 90.0))
        throw ParameterError("sun elevation must lie in (0, 90] degrees");
}

DatasetSpec DatasetSpec::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset spec " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed dataset spec: " + std::string(e.what()));
    }
    DatasetSpec s;
    try {
        if (j.contains("scene")) {
            const auto& sc = j.at("scene");
            s.scene.rows = sc.value("rows", s.scene.rows);
            s.scene.cols = sc.value("cols", s.scene.cols);
            s.scene.gsd_m = sc.value("gsd_m", s.scene.gsd_m);
            s.scene.n_buildings = sc.value("n_buildings", s.scene.n_buildings);
            if (sc.contains("roof_mix")) {
                const auto mix = sc.at("roof_mix").get<std::vector<double>>();
                if (mix.size() != 4)
                    throw FormatError("roof_mix needs 4 probabilities (flat, gable, hip, zigzag)");
                std::copy(mix.begin(), mix.end(), s.scene.roof_mix.begin());
            }
            s.scene.height_min_m = sc.value("height_min_m", s.scene.height_min_m);
            s.scene.height_max_m = sc.value("height_max_m", s.scene.height_max_m);
            s.scene.seed = sc.value("seed", s.scene.seed);
            s.scene.omit_from_gt_rate = sc.value("omit_from_gt_rate", s.scene.omit_from_gt_rate);
        }
        if (j.contains("degrade")) {
            const auto& dg = j.at("degrade");
            s.degrade.noise_sigma_m = dg.value("noise_sigma_m", s.degrade.noise_sigma_m);
            s.degrade.smooth_radius_px = dg.value("smooth_radius_px", s.degrade.smooth_radius_px);
            s.degrade.dropout_rate = dg.value("dropout_rate", s.degrade.dropout_rate);
            s.degrade.veg_blob_count = dg.value("veg_blob_count", s.degrade.veg_blob_count);
            s.degrade.veg_height_m = dg.value("veg_height_m", s.degrade.veg_height_m);
            s.degrade.seed = dg.value("seed", s.degrade.seed);
        }
        s.sun_azimuth_deg = j.value("sun_azimuth_deg", s.sun_azimuth_deg);
        s.sun_elevation_deg = j.value("sun_elevation_deg", s.sun_elevation_deg);
        s.albedo_noise = j.value("albedo_noise", s.albedo_noise);
        s.count = j.value("count", s.count);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("dataset spec: " + std::string(e.what()));
    }
    s.validate();
    return s;
}

std::string DatasetSpec::to_json_text() const {
    nlohmann::ordered_json j;
    j["scene"] = {{"rows", scene.rows},
                  {"cols", scene.cols},
                  {"gsd_m", scene.gsd_m},
                  {"n_buildings", scene.n_buildings},
                  {"roof_mix", scene.roof_mix},
                  {"height_min_m", scene.height_min_m},
                  {"height_max_m", scene.height_max_m},
                  {"seed", scene.seed},
                  {"omit_from_gt_rate", scene.omit_from_gt_rate}};
    j["degrade"] = {{"noise_sigma_m", degrade.noise_sigma_m},
                    {"smooth_radius_px", degrade.smooth_radius_px},
                    {"dropout_rate", degrade.dropout_rate},
                    {"veg_blob_count", degrade.veg_blob_count},
                    {"veg_height_m", degrade.veg_height_m},
                    {"seed", degrade.seed}};
    j["sun_azimuth_deg"] = sun_azimuth_deg;
    j["sun_elevation_deg"] = sun_elevation_deg;
    j["albedo_noise"] = albedo_noise;
    j["count"] = count;
    return j.dump(2);
}

data::DatasetManifest build_dataset(const DatasetSpec& spec,
                                    const std::filesystem::path& out_dir) {
    spec.validate();
    std::filesystem::create_directories(out_dir);

    data::DatasetManifest manifest;
    manifest.root = out_dir;
    manifest.gsd_m = spec.scene.gsd_m;
    manifest.intensity_norm = NormSpec{0.0f, 1.0f, NormSpec::Kind::intensity};

    struct Generated {
        Scene scene;
        RasterGrid stereo, pan;
    };
    std::vector<Generated> generated;
    generated.reserve(static_cast<std::size_t>(spec.count));

    float h_min = 0.0f, h_max = 1.0f;
    bool first = true;
    for (int i = 0; i < spec.count; ++i) {
        SceneSpec ss = spec.scene;
        ss.seed = spec.scene.seed + static_cast<std::uint64_t>(i);
        DegradationSpec ds = spec.degrade;
        ds.seed = spec.degrade.seed + static_cast<std::uint64_t>(i);
        Generated g;
        g.scene = generate_scene(ss);
        g.stereo = degrade_to_stereo_dsm(g.scene.stereo_source, ds, &g.scene.buildings);
        g.pan = render_pan(g.scene.gt_dsm, spec.sun_azimuth_deg, spec.sun_elevation_deg,
                           spec.albedo_noise);
        for (const RasterGrid* grid : {&g.scene.gt_dsm, &g.stereo}) {
            for (float v : grid->values()) {
                if (grid->is_nodata(v)) continue;
                if (first) {
                    h_min = h_max = v;
                    first = false;
                } else {
                    h_min = std::min(h_min, v);
                    h_max = std::max(h_max, v);
                }
            }
        }
        generated.push_back(std::move(g));
    }
    manifest.height_norm =
        NormSpec{std::floor(h_min) - 1.0f, std::ceil(h_max) + 1.0f, NormSpec::Kind::height};

    for (int i = 0; i < spec.count; ++i) {
        char stem[32];
        std::snprintf(stem, sizeof(stem), "scene_%04d", i);
        data::ScenePaths p;
        p.id = i;
        p.gt = std::string(stem) + "_gt.r32";
        p.stereo = std::string(stem) + "_stereo.r32";
        p.pan = std::string(stem) + "_pan.r32";
        p.mask = std::string(stem) + "_mask.r32";
        p.n_buildings = static_cast<int>(generated[i].scene.buildings.size());
        write_raster(generated[i].scene.gt_dsm, out_dir / p.gt);
        write_raster(generated[i].stereo, out_dir / p.stereo);
        write_raster(generated[i].pan, out_dir / p.pan);
        write_raster(generated[i].scene.footprints, out_dir / p.mask);
        manifest.scenes.push_back(std::move(p));
        switch (i % 10) {
            case 8: manifest.val_ids.push_back(i); break;
            case 9: manifest.test_ids.push_back(i); break;
            default: manifest.train_ids.push_back(i); break;
        }
    }
    manifest.save(out_dir / "dataset.json");
    return manifest;
}

}  // namespace wnetgan::synth
