#include "habitat/raster_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

// Self-contained GeoTIFF codec. Scope: uncompressed strip layout, chunky or
// planar, uint8/uint16/int32/float32 samples, both byte orders on read,
// little-endian on write. Georeferencing via ModelPixelScale + ModelTiepoint
// (or an axis-aligned ModelTransformation), CRS via GeoKeyDirectory key 3072,
// nodata via the GDAL_NODATA ASCII tag. Band kinds/tags round-trip through
// ImageDescription; foreign files fall back to heuristics.

namespace habitat {

namespace {

// ---- TIFF constants ----
constexpr std::uint16_t kTagImageWidth = 256;
constexpr std::uint16_t kTagImageLength = 257;
constexpr std::uint16_t kTagBitsPerSample = 258;
constexpr std::uint16_t kTagCompression = 259;
constexpr std::uint16_t kTagPhotometric = 262;
constexpr std::uint16_t kTagImageDescription = 270;
constexpr std::uint16_t kTagStripOffsets = 273;
constexpr std::uint16_t kTagSamplesPerPixel = 277;
constexpr std::uint16_t kTagRowsPerStrip = 278;
constexpr std::uint16_t kTagStripByteCounts = 279;
constexpr std::uint16_t kTagPlanarConfig = 284;
constexpr std::uint16_t kTagTileWidth = 322;
constexpr std::uint16_t kTagSampleFormat = 339;
constexpr std::uint16_t kTagModelPixelScale = 33550;
constexpr std::uint16_t kTagModelTiepoint = 33922;
constexpr std::uint16_t kTagModelTransformation = 34264;
constexpr std::uint16_t kTagGeoKeyDirectory = 34735;
constexpr std::uint16_t kTagGdalNodata = 42113;

constexpr std::uint16_t kTypeByte = 1;
constexpr std::uint16_t kTypeAscii = 2;
constexpr std::uint16_t kTypeShort = 3;
constexpr std::uint16_t kTypeLong = 4;
constexpr std::uint16_t kTypeSLong = 9;
constexpr std::uint16_t kTypeFloat = 11;
constexpr std::uint16_t kTypeDouble = 12;

std::size_t type_size(std::uint16_t type) {
    switch (type) {
        case kTypeByte: case kTypeAscii: return 1;
        case kTypeShort: return 2;
        case kTypeLong: case kTypeSLong: case kTypeFloat: return 4;
        case kTypeDouble: return 8;
        case 5: case 10: return 8;  // RATIONAL/SRATIONAL
        case 6: return 1;           // SBYTE
        case 8: return 2;           // SSHORT
        default: return 0;
    }
}

struct ByteReader {
    const std::vector<std::uint8_t>& data;
    bool big_endian = false;

    std::uint16_t u16(std::size_t off) const {
        check(off, 2);
        return big_endian ? std::uint16_t(data[off] << 8 | data[off + 1])
                          : std::uint16_t(data[off + 1] << 8 | data[off]);
    }
    std::uint32_t u32(std::size_t off) const {
        check(off, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= std::uint32_t(data[off + i]) << (big_endian ? (24 - 8 * i) : (8 * i));
        return v;
    }
    std::uint64_t u64(std::size_t off) const {
        check(off, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= std::uint64_t(data[off + i]) << (big_endian ? (56 - 8 * i) : (8 * i));
        return v;
    }
    double f64(std::size_t off) const {
        const std::uint64_t bits = u64(off);
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
    float f32(std::size_t off) const {
        const std::uint32_t bits = u32(off);
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }
    void check(std::size_t off, std::size_t len) const {
        if (off + len > data.size()) throw std::runtime_error("GeoTIFF: truncated file");
    }
};

struct IfdEntry {
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::size_t value_offset = 0;  // offset of the value bytes in the file
};

using Ifd = std::map<std::uint16_t, IfdEntry>;

std::vector<double> entry_values(const ByteReader& r, const IfdEntry& e) {
    std::vector<double> out;
    out.reserve(e.count);
    const std::size_t sz = type_size(e.type);
    if (sz == 0) throw std::runtime_error("GeoTIFF: unsupported field type");
    for (std::uint32_t i = 0; i < e.count; ++i) {
        const std::size_t off = e.value_offset + i * sz;
        switch (e.type) {
            case kTypeByte: case kTypeAscii: r.check(off, 1); out.push_back(r.data[off]); break;
            case kTypeShort: out.push_back(r.u16(off)); break;
            case kTypeLong: out.push_back(r.u32(off)); break;
            case kTypeSLong: out.push_back(static_cast<std::int32_t>(r.u32(off))); break;
            case kTypeFloat: out.push_back(r.f32(off)); break;
            case kTypeDouble: out.push_back(r.f64(off)); break;
            default: throw std::runtime_error("GeoTIFF: unsupported field type");
        }
    }
    return out;
}

std::string entry_ascii(const ByteReader& r, const IfdEntry& e) {
    r.check(e.value_offset, e.count);
    std::string s(reinterpret_cast<const char*>(r.data.data()) + e.value_offset, e.count);
    while (!s.empty() && s.back() == '\0') s.pop_back();
    return s;
}

double first_or(const Ifd& ifd, const ByteReader& r, std::uint16_t tag, double fallback) {
    auto it = ifd.find(tag);
    if (it == ifd.end()) return fallback;
    auto vals = entry_values(r, it->second);
    return vals.empty() ? fallback : vals[0];
}

DType dtype_from(int bits, int format) {
    if (bits == 8 && format == 1) return DType::U8;
    if (bits == 16 && format == 1) return DType::U16;
    if (bits == 32 && format == 2) return DType::I32;
    if (bits == 32 && format == 3) return DType::F32;
    throw std::runtime_error("GeoTIFF: unsupported sample type (bits=" + std::to_string(bits) +
                             ", format=" + std::to_string(format) + ")");
}

double decode_sample(const ByteReader& r, std::size_t off, DType dt) {
    switch (dt) {
        case DType::U8: r.check(off, 1); return r.data[off];
        case DType::U16: return r.u16(off);
        case DType::I32: return static_cast<std::int32_t>(r.u32(off));
        case DType::F32: return r.f32(off);
    }
    return 0;
}

std::size_t dtype_bytes(DType dt) {
    switch (dt) {
        case DType::U8: return 1;
        case DType::U16: return 2;
        case DType::I32: case DType::F32: return 4;
    }
    return 0;
}

// ImageDescription payload: "habitat:kinds=...;tags=..." (comma per band).
std::string describe_bands(const GeoGrid& grid) {
    std::string kinds, tags;
    for (std::size_t i = 0; i < grid.bands.size(); ++i) {
        if (i) { kinds += ','; tags += ','; }
        kinds += grid.bands[i].kind == BandKind::Categorical ? "categorical" : "continuous";
        tags += tag_to_string(grid.bands[i].tag, grid.bands[i].score_class);
    }
    return "habitat:kinds=" + kinds + ";tags=" + tags;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) { parts.push_back(cur); cur.clear(); }
        else cur += c;
    }
    parts.push_back(cur);
    return parts;
}

void apply_band_description(GeoGrid& grid, const std::string& desc) {
    if (desc.rfind("habitat:", 0) != 0) return;
    for (const std::string& field : split(desc.substr(8), ';')) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq);
        const auto parts = split(field.substr(eq + 1), ',');
        if (parts.size() != grid.bands.size()) continue;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (key == "kinds") {
                grid.bands[i].kind = parts[i] == "categorical" ? BandKind::Categorical
                                                               : BandKind::Continuous;
            } else if (key == "tags") {
                auto [tag, score] = tag_from_string(parts[i]);
                grid.bands[i].tag = tag;
                grid.bands[i].score_class = score;
            }
        }
    }
}

// Foreign files carry no band metadata; infer like the rest of the pipeline
// expects: float data is continuous, 3/4-band integer imagery is continuous
// R,G,B(,NIR), single-band integer data is a label map.
void infer_band_semantics(GeoGrid& grid) {
    const bool integer = grid.bands[0].dtype != DType::F32;
    const std::size_t n = grid.bands.size();
    if (integer && (n == 3 || n == 4)) {
        const Tag tags[4] = {Tag::R, Tag::G, Tag::B, Tag::NIR};
        for (std::size_t i = 0; i < n; ++i) {
            grid.bands[i].kind = BandKind::Continuous;
            grid.bands[i].tag = tags[i];
        }
    } else {
        for (Band& band : grid.bands) {
            band.kind = integer ? BandKind::Categorical : BandKind::Continuous;
            band.tag = integer ? Tag::Label : Tag::None;
        }
    }
}

} // namespace

GeoGrid read_geotiff(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open raster: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 8) throw std::runtime_error("GeoTIFF: truncated file: " + path);

    ByteReader r{bytes};
    if (bytes[0] == 'I' && bytes[1] == 'I') r.big_endian = false;
    else if (bytes[0] == 'M' && bytes[1] == 'M') r.big_endian = true;
    else throw std::runtime_error("unsupported raster format (not a TIFF): " + path);
    const std::uint16_t magic = r.u16(2);
    if (magic == 43) throw std::runtime_error("GeoTIFF: BigTIFF unsupported: " + path);
    if (magic != 42) throw std::runtime_error("unsupported raster format (bad TIFF magic): " + path);

    // First IFD only.
    const std::size_t ifd_off = r.u32(4);
    const std::uint16_t entry_count = r.u16(ifd_off);
    Ifd ifd;
    for (std::uint16_t i = 0; i < entry_count; ++i) {
        const std::size_t e = ifd_off + 2 + i * 12;
        IfdEntry entry;
        const std::uint16_t tag = r.u16(e);
        entry.type = r.u16(e + 2);
        entry.count = r.u32(e + 4);
        const std::size_t payload = entry.count * type_size(entry.type);
        entry.value_offset = payload <= 4 ? e + 8 : r.u32(e + 8);
        ifd[tag] = entry;
    }

    if (ifd.count(kTagTileWidth)) throw std::runtime_error("GeoTIFF: tiled layout unsupported: " + path);
    const int compression = static_cast<int>(first_or(ifd, r, kTagCompression, 1));
    if (compression != 1)
        throw std::runtime_error("GeoTIFF: compressed files unsupported (compression=" +
                                 std::to_string(compression) + "): " + path);

    const int width = static_cast<int>(first_or(ifd, r, kTagImageWidth, 0));
    const int height = static_cast<int>(first_or(ifd, r, kTagImageLength, 0));
    if (width <= 0 || height <= 0) throw std::runtime_error("GeoTIFF: bad dimensions: " + path);
    const int spp = static_cast<int>(first_or(ifd, r, kTagSamplesPerPixel, 1));
    const int planar = static_cast<int>(first_or(ifd, r, kTagPlanarConfig, 1));

    std::vector<double> bits(spp, 1), fmts(spp, 1);
    if (auto it = ifd.find(kTagBitsPerSample); it != ifd.end()) bits = entry_values(r, it->second);
    if (auto it = ifd.find(kTagSampleFormat); it != ifd.end()) fmts = entry_values(r, it->second);
    if (static_cast<int>(bits.size()) == 1 && spp > 1) bits.assign(spp, bits[0]);
    if (static_cast<int>(fmts.size()) == 1 && spp > 1) fmts.assign(spp, fmts[0]);
    if (static_cast<int>(bits.size()) < spp || static_cast<int>(fmts.size()) < spp)
        throw std::runtime_error("GeoTIFF: inconsistent per-sample metadata: " + path);
    for (int s = 1; s < spp; ++s) {
        if (bits[s] != bits[0] || fmts[s] != fmts[0])
            throw std::runtime_error("GeoTIFF: mixed per-band dtypes unsupported: " + path);
    }
    const DType dtype = dtype_from(static_cast<int>(bits[0]), static_cast<int>(fmts[0]));
    const std::size_t sample_bytes = dtype_bytes(dtype);

    // Georeferencing.
    double sx = 0, sy = 0, ox = 0, oy = 0;
    bool have_geo = false;
    if (auto it = ifd.find(kTagModelPixelScale); it != ifd.end()) {
        const auto scale = entry_values(r, it->second);
        auto tp = ifd.find(kTagModelTiepoint);
        if (scale.size() >= 2 && tp != ifd.end()) {
            const auto tie = entry_values(r, tp->second);
            if (tie.size() >= 6) {
                sx = scale[0];
                sy = scale[1];
                ox = tie[3] - tie[0] * sx;
                oy = tie[4] + tie[1] * sy;
                have_geo = true;
            }
        }
    } else if (auto tr = ifd.find(kTagModelTransformation); tr != ifd.end()) {
        const auto m = entry_values(r, tr->second);
        if (m.size() >= 16) {
            if (m[1] != 0 || m[4] != 0)
                throw std::runtime_error("GeoTIFF: rotated geotransform unsupported: " + path);
            sx = m[0];
            sy = -m[5];
            ox = m[3];
            oy = m[7];
            have_geo = true;
        }
    }
    if (!have_geo) throw std::runtime_error("GeoTIFF: missing geotransform: " + path);
    if (sx <= 0 || sy <= 0) throw std::runtime_error("GeoTIFF: bad pixel scale: " + path);
    if (std::abs(sx - sy) > 1e-9 * std::max(sx, sy))
        throw std::runtime_error("anisotropic pixels unsupported: " + path);

    int epsg = 0;
    if (auto it = ifd.find(kTagGeoKeyDirectory); it != ifd.end()) {
        const auto keys = entry_values(r, it->second);
        for (std::size_t i = 4; i + 3 < keys.size(); i += 4) {
            const int key = static_cast<int>(keys[i]);
            const int location = static_cast<int>(keys[i + 1]);
            const int value = static_cast<int>(keys[i + 3]);
            if (location != 0) continue;
            if (key == 3072) { epsg = value; break; }
            if (key == 2048 && epsg == 0) epsg = value;
        }
    }

    std::optional<double> nodata;
    if (auto it = ifd.find(kTagGdalNodata); it != ifd.end()) {
        const std::string text = entry_ascii(r, it->second);
        try {
            nodata = std::stod(text);
        } catch (...) {
            if (text == "nan" || text == "NaN") nodata = std::nan("");
        }
    }

    // Strip bookkeeping.
    auto so = ifd.find(kTagStripOffsets);
    auto sc = ifd.find(kTagStripByteCounts);
    if (so == ifd.end()) throw std::runtime_error("GeoTIFF: missing strip offsets: " + path);
    const auto strip_offsets = entry_values(r, so->second);
    std::vector<double> strip_counts;
    if (sc != ifd.end()) strip_counts = entry_values(r, sc->second);
    const long rows_per_strip =
        static_cast<long>(first_or(ifd, r, kTagRowsPerStrip, static_cast<double>(height)));
    const long strips_per_plane = (height + rows_per_strip - 1) / rows_per_strip;

    GeoGrid grid(width, height, sx, ox, oy, epsg);
    for (int b = 0; b < spp; ++b) {
        Band band;
        band.dtype = dtype;
        band.nodata = nodata;
        band.values.assign(grid.pixel_count(), 0.0);
        grid.bands.push_back(std::move(band));
    }

    auto read_strip_rows = [&](std::size_t file_off, long row0, long row1, int plane_band) {
        // plane_band < 0 means chunky (all bands interleaved).
        for (long row = row0; row < row1; ++row) {
            for (int col = 0; col < width; ++col) {
                if (plane_band < 0) {
                    for (int b = 0; b < spp; ++b) {
                        grid.bands[b].values[grid.index(static_cast<int>(row), col)] =
                            decode_sample(r, file_off, dtype);
                        file_off += sample_bytes;
                    }
                } else {
                    grid.bands[plane_band].values[grid.index(static_cast<int>(row), col)] =
                        decode_sample(r, file_off, dtype);
                    file_off += sample_bytes;
                }
            }
        }
    };

    if (planar == 1) {
        if (static_cast<long>(strip_offsets.size()) < strips_per_plane)
            throw std::runtime_error("GeoTIFF: missing strips: " + path);
        for (long s = 0; s < strips_per_plane; ++s) {
            const long row0 = s * rows_per_strip;
            const long row1 = std::min<long>(row0 + rows_per_strip, height);
            read_strip_rows(static_cast<std::size_t>(strip_offsets[s]), row0, row1, -1);
        }
    } else if (planar == 2) {
        if (static_cast<long>(strip_offsets.size()) < strips_per_plane * spp)
            throw std::runtime_error("GeoTIFF: missing strips: " + path);
        for (int b = 0; b < spp; ++b) {
            for (long s = 0; s < strips_per_plane; ++s) {
                const long row0 = s * rows_per_strip;
                const long row1 = std::min<long>(row0 + rows_per_strip, height);
                read_strip_rows(static_cast<std::size_t>(strip_offsets[b * strips_per_plane + s]),
                                row0, row1, b);
            }
        }
    } else {
        throw std::runtime_error("GeoTIFF: unknown planar configuration: " + path);
    }

    if (auto it = ifd.find(kTagImageDescription); it != ifd.end()) {
        const std::string desc = entry_ascii(r, it->second);
        if (desc.rfind("habitat:", 0) == 0) {
            apply_band_description(grid, desc);
        } else {
            infer_band_semantics(grid);
        }
    } else {
        infer_band_semantics(grid);
    }
    return grid;
}

namespace {

struct ByteWriter {
    std::vector<std::uint8_t> data;

    void u16(std::uint16_t v) {
        data.push_back(v & 0xFF);
        data.push_back(v >> 8);
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) data.push_back((v >> (8 * i)) & 0xFF);
    }
    void f64(double d) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        for (int i = 0; i < 8; ++i) data.push_back((bits >> (8 * i)) & 0xFF);
    }
    void u32_at(std::size_t off, std::uint32_t v) {
        for (int i = 0; i < 4; ++i) data[off + i] = (v >> (8 * i)) & 0xFF;
    }
    std::size_t size() const { return data.size(); }
};

void encode_sample(ByteWriter& w, double v, DType dt, const std::string& path) {
    switch (dt) {
        case DType::U8: {
            if (std::isnan(v) || v < 0 || v > 255 || v != std::floor(v))
                throw std::runtime_error("value " + std::to_string(v) + " out of range for uint8: " + path);
            w.data.push_back(static_cast<std::uint8_t>(v));
            break;
        }
        case DType::U16: {
            if (std::isnan(v) || v < 0 || v > 65535 || v != std::floor(v))
                throw std::runtime_error("value out of range for uint16: " + path);
            w.u16(static_cast<std::uint16_t>(v));
            break;
        }
        case DType::I32: {
            if (std::isnan(v) || v < -2147483648.0 || v > 2147483647.0 || v != std::floor(v))
                throw std::runtime_error("value out of range for int32: " + path);
            w.u32(static_cast<std::uint32_t>(static_cast<std::int32_t>(v)));
            break;
        }
        case DType::F32: {
            const float f = static_cast<float>(v);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            w.u32(bits);
            break;
        }
    }
}

std::string format_nodata(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

void write_geotiff(const GeoGrid& grid, const std::string& path) {
    grid.validate();
    if (grid.bands.empty()) throw std::runtime_error("cannot write raster without bands: " + path);
    const DType dtype = grid.bands[0].dtype;
    std::optional<double> nodata;
    for (const Band& band : grid.bands) {
        if (band.dtype != dtype)
            throw std::runtime_error("mixed band dtypes unsupported in one GeoTIFF; "
                                     "write separate files: " + path);
        if (band.nodata) {
            if (nodata && !(*nodata == *band.nodata ||
                            (std::isnan(*nodata) && std::isnan(*band.nodata))))
                throw std::runtime_error("bands disagree on nodata sentinel: " + path);
            nodata = band.nodata;
        }
    }
    const int spp = static_cast<int>(grid.bands.size());

    // Pixel data: chunky interleave, single strip.
    ByteWriter strip;
    for (int row = 0; row < grid.height; ++row) {
        for (int col = 0; col < grid.width; ++col) {
            for (int b = 0; b < spp; ++b) {
                encode_sample(strip, grid.at(b, row, col), dtype, path);
            }
        }
    }

    const std::string description = describe_bands(grid);
    const std::vector<std::uint16_t> geokeys = {
        1, 1, 0, static_cast<std::uint16_t>(grid.epsg > 0 ? 3 : 2),
        1024, 0, 1, 1,   // ModelTypeProjected
        1025, 0, 1, 1,   // RasterPixelIsArea
    };
    std::vector<std::uint16_t> all_keys = geokeys;
    if (grid.epsg > 0) {
        all_keys[3] = 3;
        all_keys.insert(all_keys.end(), {3072, 0, 1, static_cast<std::uint16_t>(grid.epsg)});
    } else {
        all_keys[3] = 2;
    }

    ByteWriter w;
    w.data.reserve(strip.size() + 1024);
    w.data = {'I', 'I'};
    w.u16(42);
    const std::size_t ifd_offset_slot = w.size();
    w.u32(0);  // patched below

    const std::size_t strip_offset = w.size();
    w.data.insert(w.data.end(), strip.data.begin(), strip.data.end());
    if (w.size() % 2) w.data.push_back(0);  // keep value offsets word-aligned

    // External value areas.
    auto reserve_shorts = [&](const std::vector<std::uint16_t>& vals) {
        const std::size_t off = w.size();
        for (std::uint16_t v : vals) w.u16(v);
        if (w.size() % 2) w.data.push_back(0);
        return off;
    };
    auto reserve_ascii = [&](const std::string& s) {
        const std::size_t off = w.size();
        for (char c : s) w.data.push_back(static_cast<std::uint8_t>(c));
        w.data.push_back(0);
        if (w.size() % 2) w.data.push_back(0);
        return off;
    };
    auto reserve_doubles = [&](const std::vector<double>& vals) {
        const std::size_t off = w.size();
        for (double v : vals) w.f64(v);
        return off;
    };

    const std::uint16_t bits =
        dtype == DType::U8 ? 8 : dtype == DType::U16 ? 16 : 32;
    const std::uint16_t fmt =
        dtype == DType::I32 ? 2 : dtype == DType::F32 ? 3 : 1;

    std::size_t bits_off = 0, fmt_off = 0;
    if (spp > 2) {
        bits_off = reserve_shorts(std::vector<std::uint16_t>(spp, bits));
        fmt_off = reserve_shorts(std::vector<std::uint16_t>(spp, fmt));
    }
    const std::size_t desc_off = reserve_ascii(description);
    const std::size_t scale_off =
        reserve_doubles({grid.pixel_size, grid.pixel_size, 0.0});
    const std::size_t tie_off =
        reserve_doubles({0.0, 0.0, 0.0, grid.origin_x, grid.origin_y, 0.0});
    const std::size_t keys_off = reserve_shorts(all_keys);
    std::size_t nodata_off = 0;
    std::string nodata_text;
    if (nodata) {
        nodata_text = format_nodata(*nodata);
        // Keep the payload above 4 bytes so the value always lives at an
        // external offset (inline ASCII would need special casing).
        while (nodata_text.size() + 1 <= 4) nodata_text += ' ';
        nodata_off = reserve_ascii(nodata_text);
    }

    struct RawEntry {
        std::uint16_t tag, type;
        std::uint32_t count, value;
    };
    std::vector<RawEntry> entries;
    auto add = [&](std::uint16_t tag, std::uint16_t type, std::uint32_t count, std::uint32_t value) {
        entries.push_back({tag, type, count, value});
    };

    add(kTagImageWidth, kTypeLong, 1, static_cast<std::uint32_t>(grid.width));
    add(kTagImageLength, kTypeLong, 1, static_cast<std::uint32_t>(grid.height));
    if (spp <= 2) {
        std::uint32_t packed = bits;
        if (spp == 2) packed |= std::uint32_t(bits) << 16;
        add(kTagBitsPerSample, kTypeShort, spp, packed);
    } else {
        add(kTagBitsPerSample, kTypeShort, spp, static_cast<std::uint32_t>(bits_off));
    }
    add(kTagCompression, kTypeShort, 1, 1);
    add(kTagPhotometric, kTypeShort, 1, (spp == 3 && dtype == DType::U8) ? 2 : 1);
    add(kTagImageDescription, kTypeAscii, static_cast<std::uint32_t>(description.size() + 1),
        static_cast<std::uint32_t>(desc_off));
    add(kTagStripOffsets, kTypeLong, 1, static_cast<std::uint32_t>(strip_offset));
    add(kTagSamplesPerPixel, kTypeShort, 1, static_cast<std::uint32_t>(spp));
    add(kTagRowsPerStrip, kTypeLong, 1, static_cast<std::uint32_t>(grid.height));
    add(kTagStripByteCounts, kTypeLong, 1, static_cast<std::uint32_t>(strip.size()));
    add(kTagPlanarConfig, kTypeShort, 1, 1);
    if (spp <= 2) {
        std::uint32_t packed = fmt;
        if (spp == 2) packed |= std::uint32_t(fmt) << 16;
        add(kTagSampleFormat, kTypeShort, spp, packed);
    } else {
        add(kTagSampleFormat, kTypeShort, spp, static_cast<std::uint32_t>(fmt_off));
    }
    add(kTagModelPixelScale, kTypeDouble, 3, static_cast<std::uint32_t>(scale_off));
    add(kTagModelTiepoint, kTypeDouble, 6, static_cast<std::uint32_t>(tie_off));
    add(kTagGeoKeyDirectory, kTypeShort, static_cast<std::uint32_t>(all_keys.size()),
        static_cast<std::uint32_t>(keys_off));
    if (nodata) {
        add(kTagGdalNodata, kTypeAscii, static_cast<std::uint32_t>(nodata_text.size() + 1),
            static_cast<std::uint32_t>(nodata_off));
    }

    std::sort(entries.begin(), entries.end(),
              [](const RawEntry& a, const RawEntry& b) { return a.tag < b.tag; });

    const std::size_t ifd_offset = w.size();
    w.u32_at(ifd_offset_slot, static_cast<std::uint32_t>(ifd_offset));
    w.u16(static_cast<std::uint16_t>(entries.size()));
    for (const RawEntry& e : entries) {
        w.u16(e.tag);
        w.u16(e.type);
        w.u32(e.count);
        // Inline values for SHORT counts of 1 occupy the low bytes; the
        // packed encodings above already account for multi-short inlining.
        if (e.type == kTypeShort && e.count == 1) {
            w.u16(static_cast<std::uint16_t>(e.value));
            w.u16(0);
        } else {
            w.u32(e.value);
        }
    }
    w.u32(0);  // no next IFD

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write raster: " + path);
    out.write(reinterpret_cast<const char*>(w.data.data()),
              static_cast<std::streamsize>(w.data.size()));
    if (!out) throw std::runtime_error("raster write failed: " + path);
}

// ---- plain-text grid format (test fixtures) ----

void write_text_grid(const GeoGrid& grid, const std::string& path) {
    grid.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write raster: " + path);
    out.precision(17);
    out << "habitatgrid 1\n";
    out << "width " << grid.width << "\n";
    out << "height " << grid.height << "\n";
    out << "pixel_size " << grid.pixel_size << "\n";
    out << "origin " << grid.origin_x << " " << grid.origin_y << "\n";
    out << "epsg " << grid.epsg << "\n";
    out << "bands " << grid.bands.size() << "\n";
    for (const Band& band : grid.bands) {
        out << "band kind=" << (band.kind == BandKind::Categorical ? "categorical" : "continuous")
            << " tag=" << tag_to_string(band.tag, band.score_class) << " dtype="
            << (band.dtype == DType::U8 ? "u8" : band.dtype == DType::U16 ? "u16"
                : band.dtype == DType::I32 ? "i32" : "f32")
            << " nodata=" << (band.nodata ? format_nodata(*band.nodata) : "none") << "\n";
        for (int row = 0; row < grid.height; ++row) {
            for (int col = 0; col < grid.width; ++col) {
                if (col) out << ' ';
                out << band.values[grid.index(row, col)];
            }
            out << '\n';
        }
    }
    if (!out) throw std::runtime_error("raster write failed: " + path);
}

GeoGrid read_text_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open raster: " + path);
    std::string word;
    auto expect = [&](const std::string& key) {
        in >> word;
        if (word != key) throw std::runtime_error("text grid: expected '" + key + "' in " + path);
    };
    expect("habitatgrid");
    int version;
    in >> version;
    if (version != 1) throw std::runtime_error("text grid: unsupported version in " + path);

    GeoGrid grid;
    int band_count = 0;
    expect("width"); in >> grid.width;
    expect("height"); in >> grid.height;
    expect("pixel_size"); in >> grid.pixel_size;
    expect("origin"); in >> grid.origin_x >> grid.origin_y;
    expect("epsg"); in >> grid.epsg;
    expect("bands"); in >> band_count;
    if (!in || grid.width <= 0 || grid.height <= 0 || band_count <= 0)
        throw std::runtime_error("text grid: bad header in " + path);

    for (int b = 0; b < band_count; ++b) {
        expect("band");
        Band band;
        for (int field = 0; field < 4; ++field) {
            in >> word;
            const auto eq = word.find('=');
            if (eq == std::string::npos) throw std::runtime_error("text grid: bad band header in " + path);
            const std::string key = word.substr(0, eq), value = word.substr(eq + 1);
            if (key == "kind") {
                band.kind = value == "categorical" ? BandKind::Categorical : BandKind::Continuous;
            } else if (key == "tag") {
                auto [tag, score] = tag_from_string(value);
                band.tag = tag;
                band.score_class = score;
            } else if (key == "dtype") {
                band.dtype = value == "u8" ? DType::U8 : value == "u16" ? DType::U16
                             : value == "i32" ? DType::I32 : DType::F32;
            } else if (key == "nodata") {
                if (value != "none") band.nodata = value == "nan" ? std::nan("") : std::stod(value);
            }
        }
        band.values.resize(grid.pixel_count());
        for (double& v : band.values) {
            if (!(in >> v)) throw std::runtime_error("text grid: truncated values in " + path);
        }
        grid.bands.push_back(std::move(band));
    }
    grid.validate();
    return grid;
}

namespace {
bool has_suffix(const std::string& s, const std::string& suffix) {
    if (s.size() < suffix.size()) return false;
    std::string tail = s.substr(s.size() - suffix.size());
    std::transform(tail.begin(), tail.end(), tail.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return tail == suffix;
}
} // namespace

GeoGrid read_raster(const std::string& path) {
    if (has_suffix(path, ".tif") || has_suffix(path, ".tiff")) return read_geotiff(path);
    if (has_suffix(path, ".grid")) return read_text_grid(path);
    throw std::runtime_error("unsupported raster format: " + path);
}

void write_raster(const GeoGrid& grid, const std::string& path) {
    if (has_suffix(path, ".tif") || has_suffix(path, ".tiff")) return write_geotiff(grid, path);
    if (has_suffix(path, ".grid")) return write_text_grid(grid, path);
    throw std::runtime_error("unsupported raster format: " + path);
}

} // namespace habitat
