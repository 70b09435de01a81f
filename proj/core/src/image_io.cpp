#include "wnetgan/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "wnetgan/errors.hpp"

namespace wnetgan::img {

namespace {

void push_u32_be(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

void push_chunk(std::vector<unsigned char>& out, const char type[4],
                const std::vector<unsigned char>& payload) {
    push_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const auto crc = crc32(0L, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
    push_u32_be(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<unsigned char>& rgb) {
    if (width < 1 || height < 1) throw ParameterError("png dimensions must be >= 1");
    if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
        throw ParameterError("png payload size does not match dimensions");

    // filter byte 0 per scanline
    std::vector<unsigned char> raw;
    raw.reserve(static_cast<std::size_t>(height) * (1 + 3 * width));
    for (int r = 0; r < height; ++r) {
        raw.push_back(0);
        const auto* row = rgb.data() + static_cast<std::size_t>(r) * width * 3;
        raw.insert(raw.end(), row, row + static_cast<std::size_t>(width) * 3);
    }

    uLongf comp_cap = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> compressed(comp_cap);
    if (compress2(compressed.data(), &comp_cap, raw.data(),
                  static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw InternalError("png deflate failed");
    compressed.resize(comp_cap);

    std::vector<unsigned char> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    std::vector<unsigned char> ihdr;
    push_u32_be(ihdr, static_cast<std::uint32_t>(width));
    push_u32_be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // interlace
    push_chunk(out, "IHDR", ihdr);
    push_chunk(out, "IDAT", compressed);
    push_chunk(out, "IEND", {});

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()),
            static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write on " + path.string());
}

std::pair<int, int> png_dimensions(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    unsigned char head[24];
    f.read(reinterpret_cast<char*>(head), sizeof(head));
    if (!f || std::memcmp(head, "\x89PNG\r\n\x1a\n", 8) != 0 ||
        std::memcmp(head + 12, "IHDR", 4) != 0)
        throw FormatError(path.string() + ": not a PNG");
    auto be = [&](int off) {
        return (head[off] << 24) | (head[off + 1] << 16) | (head[off + 2] << 8) |
               head[off + 3];
    };
    return {be(16), be(20)};
}

namespace {

struct Rgb {
    double r, g, b;
};

// Terrain-style ramp over normalized height.
Rgb colormap(double t) {
    static const Rgb stops[] = {{0.16, 0.32, 0.55},   // low: slate blue
                                {0.20, 0.55, 0.25},   // green
                                {0.75, 0.72, 0.30},   // yellow
                                {0.62, 0.40, 0.22},   // brown
                                {0.95, 0.95, 0.95}};  // high: white
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const int i = std::min(3, static_cast<int>(t));
    const double f = t - i;
    return {stops[i].r + f * (stops[i + 1].r - stops[i].r),
            stops[i].g + f * (stops[i + 1].g - stops[i].g),
            stops[i].b + f * (stops[i + 1].b - stops[i].b)};
}

}  // namespace

void write_preview_png(const RasterGrid& dsm, const std::filesystem::path& path,
                       double sun_azimuth_deg, double sun_elevation_deg) {
    const int rows = dsm.rows(), cols = dsm.cols();

    float h_min = 0.0f, h_max = 1.0f;
    bool first = true;
    for (float v : dsm.values()) {
        if (dsm.is_nodata(v)) continue;
        if (first) {
            h_min = h_max = v;
            first = false;
        } else {
            h_min = std::min(h_min, v);
            h_max = std::max(h_max, v);
        }
    }
    const double span = h_max > h_min ? static_cast<double>(h_max) - h_min : 1.0;

    const double az = sun_azimuth_deg * std::numbers::pi / 180.0;
    const double el = sun_elevation_deg * std::numbers::pi / 180.0;
    const double lx = std::cos(el) * std::sin(az);
    const double ly = -std::cos(el) * std::cos(az);
    const double lz = std::sin(el);
    const double gsd = dsm.gsd_m;

    std::vector<unsigned char> rgb(static_cast<std::size_t>(rows) * cols * 3);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            unsigned char* px = rgb.data() + (static_cast<std::size_t>(r) * cols + c) * 3;
            const float v = dsm.at(r, c);
            if (dsm.is_nodata(v)) {
                px[0] = px[1] = px[2] = 128;
                continue;
            }
            const int c_lo = std::max(0, c - 1), c_hi = std::min(cols - 1, c + 1);
            const int r_lo = std::max(0, r - 1), r_hi = std::min(rows - 1, r + 1);
            auto sample = [&](int rr, int cc) {
                const float s = dsm.at(rr, cc);
                return dsm.is_nodata(s) ? static_cast<double>(v) : static_cast<double>(s);
            };
            const double p = (sample(r, c_hi) - sample(r, c_lo)) / ((c_hi - c_lo) * gsd);
            const double q = (sample(r_hi, c) - sample(r_lo, c)) / ((r_hi - r_lo) * gsd);
            const double norm = std::sqrt(p * p + q * q + 1.0);
            const double shade = std::max(0.0, (-p * lx - q * ly + lz) / norm);
            const Rgb base = colormap((v - h_min) / span);
            const double lum = 0.35 + 0.65 * shade;
            px[0] = static_cast<unsigned char>(std::clamp(base.r * lum, 0.0, 1.0) * 255.0);
            px[1] = static_cast<unsigned char>(std::clamp(base.g * lum, 0.0, 1.0) * 255.0);
            px[2] = static_cast<unsigned char>(std::clamp(base.b * lum, 0.0, 1.0) * 255.0);
        }
    }
    write_png_rgb8(path, cols, rows, rgb);
}

}  // namespace wnetgan::img
