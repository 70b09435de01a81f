#pragma once

#include <filesystem>
#include <vector>

#include "wnetgan/raster.hpp"

namespace wnetgan::img {

// Minimal RGB8 PNG encoder (zlib-deflated, filter 0).
void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<unsigned char>& rgb);

// Color-shaded hillshade preview of a DSM: height through a terrain ramp,
// modulated by Lambertian shading. Nodata pixels render mid-gray.
void write_preview_png(const RasterGrid& dsm, const std::filesystem::path& path,
                       double sun_azimuth_deg = 315.0,
                       double sun_elevation_deg = 45.0);

// Parses width/height from a PNG header (used by tests and sanity checks).
std::pair<int, int> png_dimensions(const std::filesystem::path& path);

}  // namespace wnetgan::img
