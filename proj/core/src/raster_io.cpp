#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "wnetgan/errors.hpp"
#include "wnetgan/raster.hpp"

namespace wnetgan {

namespace fs = std::filesystem;

namespace {

fs::path sidecar_path(const fs::path& r32_path) {
    fs::path p = r32_path;
    p.replace_extension(".json");
    return p;
}

std::vector<char> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto n = in.tellg();
    in.seekg(0);
    std::vector<char> buf(static_cast<std::size_t>(n));
    in.read(buf.data(), n);
    if (!in) throw IoError("short read on " + path.string());
    return buf;
}

static_assert(std::endian::native == std::endian::little,
              "r32 payload I/O assumes a little-endian host");

RasterGrid load_r32(const fs::path& path) {
    const fs::path meta_path = sidecar_path(path);
    nlohmann::json meta;
    {
        std::ifstream in(meta_path);
        if (!in) throw IoError("missing sidecar " + meta_path.string());
        try {
            in >> meta;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("malformed sidecar " + meta_path.string() + ": " + e.what());
        }
    }

    int rows = 0, cols = 0;
    RasterGrid out;
    try {
        rows = meta.at("rows").get<int>();
        cols = meta.at("cols").get<int>();
        if (rows < 1 || cols < 1) throw FormatError("sidecar dimensions must be >= 1");
        out = RasterGrid(rows, cols);
        out.gsd_m = meta.at("gsd_m").get<float>();
        out.origin_x = meta.at("origin_x").get<double>();
        out.origin_y = meta.at("origin_y").get<double>();
        if (!meta.at("nodata").is_null()) out.nodata = meta.at("nodata").get<float>();
        out.kind = raster_kind_from_string(meta.at("kind").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed sidecar " + meta_path.string() + ": " + e.what());
    }

    const std::vector<char> payload = read_file(path);
    const std::size_t expected = static_cast<std::size_t>(rows) * cols * sizeof(float);
    if (payload.size() != expected) {
        throw CorruptionError(path.string() + ": payload is " +
                              std::to_string(payload.size()) + " bytes, header implies " +
                              std::to_string(expected));
    }
    std::memcpy(out.values().data(), payload.data(), expected);
    return out;
}

}  // namespace

void write_raster(const RasterGrid& raster, const fs::path& path) {
    if (raster.rows() < 1 || raster.cols() < 1) throw ParameterError("cannot write empty raster");

    nlohmann::ordered_json meta;
    meta["rows"] = raster.rows();
    meta["cols"] = raster.cols();
    meta["gsd_m"] = raster.gsd_m;
    meta["origin_x"] = raster.origin_x;
    meta["origin_y"] = raster.origin_y;
    if (raster.nodata)
        meta["nodata"] = *raster.nodata;
    else
        meta["nodata"] = nullptr;
    meta["kind"] = to_string(raster.kind);

    {
        std::ofstream out(sidecar_path(path), std::ios::trunc);
        if (!out) throw IoError("cannot write " + sidecar_path(path).string());
        out << meta.dump(2) << "\n";
    }
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out.write(reinterpret_cast<const char*>(raster.values().data()),
                  static_cast<std::streamsize>(raster.size() * sizeof(float)));
        if (!out) throw IoError("short write on " + path.string());
    }
}

RasterGrid load_raster(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("no such file: " + path.string());
    const std::string ext = path.extension().string();
    if (ext == ".tif" || ext == ".tiff") return load_geotiff(path);
    if (ext == ".r32") return load_r32(path);
    throw FormatError("unsupported raster extension '" + ext + "' (expect .r32 or .tif)");
}

// ---------------------------------------------------------------------------
// Minimal GeoTIFF ingestion: classic TIFF, strip-organized, uncompressed,
// single band. Enough to pull real DSM/PAN exports in; anything fancier
// should be converted to .r32 upstream.
// ---------------------------------------------------------------------------

namespace {

class TiffParser {
public:
    explicit TiffParser(std::vector<char> bytes, std::string name)
        : b_(std::move(bytes)), name_(std::move(name)) {
        if (b_.size() < 8) throw FormatError(name_ + ": not a TIFF (too short)");
        if (b_[0] == 'I' && b_[1] == 'I')
            big_endian_ = false;
        else if (b_[0] == 'M' && b_[1] == 'M')
            big_endian_ = true;
        else
            throw FormatError(name_ + ": not a TIFF (bad byte-order mark)");
        const std::uint16_t magic = u16(2);
        if (magic == 43) throw FormatError(name_ + ": BigTIFF is not supported");
        if (magic != 42) throw FormatError(name_ + ": not a TIFF (bad magic)");
    }

    RasterGrid parse() {
        const std::uint32_t ifd = u32(4);
        read_ifd(ifd);

        if (compression_ != 1)
            throw FormatError(name_ + ": only uncompressed TIFF is supported");
        if (samples_per_pixel_ != 1)
            throw FormatError(name_ + ": only single-band TIFF is supported");
        if (tiled_) throw FormatError(name_ + ": tiled TIFF is not supported");
        if (width_ < 1 || height_ < 1) throw CorruptionError(name_ + ": missing dimensions");
        if (strip_offsets_.empty()) throw CorruptionError(name_ + ": no strip offsets");
        if (strip_offsets_.size() != strip_counts_.size())
            throw CorruptionError(name_ + ": strip offset/count mismatch");

        RasterGrid out(static_cast<int>(height_), static_cast<int>(width_));
        out.kind = RasterKind::dsm;
        if (pixel_scale_x_ > 0.0) out.gsd_m = static_cast<float>(pixel_scale_x_);
        out.origin_x = tiepoint_x_;
        out.origin_y = tiepoint_y_;
        if (!nodata_ascii_.empty()) {
            try {
                out.nodata = std::stof(nodata_ascii_);
            } catch (...) {
                throw FormatError(name_ + ": unparseable GDAL_NODATA value");
            }
        }

        const std::size_t bytes_per_px = bits_per_sample_ / 8;
        std::size_t written = 0;
        const std::size_t total = out.size();
        for (std::size_t s = 0; s < strip_offsets_.size(); ++s) {
            std::size_t off = strip_offsets_[s];
            const std::size_t count = strip_counts_[s];
            if (off + count > b_.size())
                throw CorruptionError(name_ + ": strip extends past end of file");
            const std::size_t n_px = count / bytes_per_px;
            for (std::size_t i = 0; i < n_px; ++i, ++written) {
                if (written >= total)
                    throw CorruptionError(name_ + ": more pixels than header implies");
                out.values()[written] = sample_at(off + i * bytes_per_px);
            }
        }
        if (written != total)
            throw CorruptionError(name_ + ": strips hold " + std::to_string(written) +
                                  " pixels, header implies " + std::to_string(total));
        return out;
    }

private:
    std::uint16_t u16(std::size_t off) const {
        check(off, 2);
        const auto* p = reinterpret_cast<const unsigned char*>(b_.data() + off);
        return big_endian_ ? static_cast<std::uint16_t>(p[0] << 8 | p[1])
                           : static_cast<std::uint16_t>(p[1] << 8 | p[0]);
    }
    std::uint32_t u32(std::size_t off) const {
        check(off, 4);
        const auto* p = reinterpret_cast<const unsigned char*>(b_.data() + off);
        if (big_endian_)
            return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
                   (std::uint32_t(p[2]) << 8) | p[3];
        return (std::uint32_t(p[3]) << 24) | (std::uint32_t(p[2]) << 16) |
               (std::uint32_t(p[1]) << 8) | p[0];
    }
    double f64(std::size_t off) const {
        check(off, 8);
        unsigned char raw[8];
        std::memcpy(raw, b_.data() + off, 8);
        if (big_endian_) std::reverse(raw, raw + 8);
        double d;
        std::memcpy(&d, raw, 8);
        return d;
    }
    float f32(std::size_t off) const {
        const std::uint32_t bits = u32(off);
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }
    void check(std::size_t off, std::size_t n) const {
        if (off + n > b_.size()) throw CorruptionError(name_ + ": truncated TIFF");
    }

    static std::size_t type_size(std::uint16_t type) {
        switch (type) {
            case 1: case 2: case 6: case 7: return 1;  // BYTE/ASCII/SBYTE/UNDEF
            case 3: case 8: return 2;                  // SHORT/SSHORT
            case 4: case 9: case 11: return 4;         // LONG/SLONG/FLOAT
            case 5: case 10: case 12: return 8;        // RATIONAL/SRATIONAL/DOUBLE
            default: return 0;
        }
    }

    // Entry values live inline when they fit in 4 bytes, else behind an offset.
    std::size_t value_offset(std::size_t entry_off, std::uint16_t type,
                             std::uint32_t count) const {
        const std::size_t bytes = type_size(type) * count;
        return bytes <= 4 ? entry_off + 8 : u32(entry_off + 8);
    }

    std::uint32_t uint_value(std::size_t off, std::uint16_t type, std::uint32_t idx) const {
        if (type == 3) return u16(off + 2 * idx);
        if (type == 4) return u32(off + 4 * idx);
        throw FormatError(name_ + ": unexpected tag type " + std::to_string(type));
    }

    void read_ifd(std::uint32_t ifd_off) {
        const std::uint16_t n_entries = u16(ifd_off);
        for (std::uint16_t e = 0; e < n_entries; ++e) {
            const std::size_t off = ifd_off + 2 + std::size_t(e) * 12;
            const std::uint16_t tag = u16(off);
            const std::uint16_t type = u16(off + 2);
            const std::uint32_t count = u32(off + 4);
            const std::size_t val = value_offset(off, type, count);
            switch (tag) {
                case 256: width_ = uint_value(val, type, 0); break;
                case 257: height_ = uint_value(val, type, 0); break;
                case 258: bits_per_sample_ = uint_value(val, type, 0); break;
                case 259: compression_ = uint_value(val, type, 0); break;
                case 273:
                    for (std::uint32_t i = 0; i < count; ++i)
                        strip_offsets_.push_back(uint_value(val, type, i));
                    break;
                case 277: samples_per_pixel_ = uint_value(val, type, 0); break;
                case 279:
                    for (std::uint32_t i = 0; i < count; ++i)
                        strip_counts_.push_back(uint_value(val, type, i));
                    break;
                case 322: case 323: case 324: case 325: tiled_ = true; break;
                case 339: sample_format_ = uint_value(val, type, 0); break;
                case 33550:  // ModelPixelScale
                    if (type == 12 && count >= 2) pixel_scale_x_ = f64(val);
                    break;
                case 33922:  // ModelTiepoint: i j k x y z
                    if (type == 12 && count >= 6) {
                        tiepoint_x_ = f64(val + 3 * 8);
                        tiepoint_y_ = f64(val + 4 * 8);
                    }
                    break;
                case 42113: {  // GDAL_NODATA (ASCII)
                    check(val, count);
                    nodata_ascii_.assign(b_.data() + val, b_.data() + val + count);
                    while (!nodata_ascii_.empty() && nodata_ascii_.back() == '\0')
                        nodata_ascii_.pop_back();
                    break;
                }
                default: break;
            }
        }
    }

    float sample_at(std::size_t off) const {
        switch (sample_format_) {
            case 3:  // IEEE float
                if (bits_per_sample_ == 32) return f32(off);
                if (bits_per_sample_ == 64) return static_cast<float>(f64(off));
                break;
            case 2:  // signed int
                if (bits_per_sample_ == 16)
                    return static_cast<float>(static_cast<std::int16_t>(u16(off)));
                if (bits_per_sample_ == 32)
                    return static_cast<float>(static_cast<std::int32_t>(u32(off)));
                break;
            case 1:  // unsigned int
                if (bits_per_sample_ == 8) {
                    check(off, 1);
                    return static_cast<float>(static_cast<unsigned char>(b_[off]));
                }
                if (bits_per_sample_ == 16) return static_cast<float>(u16(off));
                if (bits_per_sample_ == 32) return static_cast<float>(u32(off));
                break;
            default: break;
        }
        throw FormatError(name_ + ": unsupported sample format " +
                          std::to_string(sample_format_) + "/" +
                          std::to_string(bits_per_sample_) + " bits");
    }

    std::vector<char> b_;
    std::string name_;
    bool big_endian_ = false;
    std::uint32_t width_ = 0, height_ = 0;
    std::uint32_t bits_per_sample_ = 1, compression_ = 1, samples_per_pixel_ = 1;
    std::uint32_t sample_format_ = 1;
    bool tiled_ = false;
    std::vector<std::size_t> strip_offsets_, strip_counts_;
    double pixel_scale_x_ = 0.0, tiepoint_x_ = 0.0, tiepoint_y_ = 0.0;
    std::string nodata_ascii_;
};

}  // namespace

RasterGrid load_geotiff(const fs::path& path) {
    TiffParser parser(read_file(path), path.filename().string());
    return parser.parse();
}

}  // namespace wnetgan
