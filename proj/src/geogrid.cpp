#include "habitat/geogrid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace habitat {

namespace {
constexpr double kAlignTol = 1e-6;  // meters
}

std::string tag_to_string(Tag tag, int score_class) {
    switch (tag) {
        case Tag::None: return "NONE";
        case Tag::R: return "R";
        case Tag::G: return "G";
        case Tag::B: return "B";
        case Tag::NIR: return "NIR";
        case Tag::DTM: return "DTM";
        case Tag::DSM: return "DSM";
        case Tag::NDSM: return "NDSM";
        case Tag::Slope: return "SLOPE";
        case Tag::Aspect: return "ASPECT";
        case Tag::Roughness: return "ROUGHNESS";
        case Tag::Curvature: return "CURVATURE";
        case Tag::Label: return "LABEL";
        case Tag::Score: return "SCORE:" + std::to_string(score_class);
    }
    return "NONE";
}

std::pair<Tag, int> tag_from_string(const std::string& text) {
    static const std::pair<const char*, Tag> plain[] = {
        {"NONE", Tag::None},  {"R", Tag::R},          {"G", Tag::G},
        {"B", Tag::B},        {"NIR", Tag::NIR},      {"DTM", Tag::DTM},
        {"DSM", Tag::DSM},    {"NDSM", Tag::NDSM},    {"SLOPE", Tag::Slope},
        {"ASPECT", Tag::Aspect}, {"ROUGHNESS", Tag::Roughness},
        {"CURVATURE", Tag::Curvature}, {"LABEL", Tag::Label}};
    for (const auto& [name, tag] : plain) {
        if (text == name) return {tag, -1};
    }
    if (text.rfind("SCORE:", 0) == 0) {
        int cls = -1;
        const char* first = text.data() + 6;
        const char* last = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(first, last, cls);
        if (ec != std::errc() || ptr != last || cls < 0)
            throw std::runtime_error("bad score tag: " + text);
        return {Tag::Score, cls};
    }
    throw std::runtime_error("unknown band tag: " + text);
}

Band& GeoGrid::add_band(BandKind kind, Tag tag, double fill) {
    Band band;
    band.kind = kind;
    band.tag = tag;
    band.dtype = kind == BandKind::Categorical ? DType::U8 : DType::F32;
    band.values.assign(pixel_count(), fill);
    bands.push_back(std::move(band));
    return bands.back();
}

void GeoGrid::validate() const {
    if (width <= 0 || height <= 0) throw std::runtime_error("grid dimensions must be positive");
    if (pixel_size <= 0) throw std::runtime_error("pixel_size must be positive");
    for (const Band& band : bands) {
        if (band.values.size() != pixel_count())
            throw std::runtime_error("band size does not match grid dimensions");
        if (band.kind == BandKind::Categorical) {
            for (double v : band.values) {
                if (band.is_nodata(v)) continue;
                if (v < 0 || v != std::floor(v))
                    throw std::runtime_error("categorical band contains non-integer value");
            }
        }
    }
}

GeoGrid make_grid(int width, int height, double pixel_size, BandKind kind, double fill, Tag tag) {
    GeoGrid grid(width, height, pixel_size);
    grid.add_band(kind, tag, fill);
    return grid;
}

bool co_registered(const GeoGrid& a, const GeoGrid& b) {
    return a.width == b.width && a.height == b.height && a.epsg == b.epsg &&
           std::abs(a.pixel_size - b.pixel_size) <= kAlignTol &&
           std::abs(a.origin_x - b.origin_x) <= kAlignTol &&
           std::abs(a.origin_y - b.origin_y) <= kAlignTol;
}

void require_co_registered(const GeoGrid& a, const GeoGrid& b) {
    if (!co_registered(a, b)) throw std::runtime_error("grids not co-registered");
}

namespace {

int round_to_int(double v) { return static_cast<int>(std::floor(v + 0.5)); }

void require_pixel_aligned(double span, double px, const char* what) {
    const double n = span / px;
    if (std::abs(n - std::round(n)) > 1e-9 || n < 0.5)
        throw std::runtime_error(std::string("target extent not pixel-aligned in ") + what);
}

double resample_nearest(const GeoGrid& src, const Band& band, double x, double y) {
    const int col = static_cast<int>(std::floor((x - src.origin_x) / src.pixel_size));
    const int row = static_cast<int>(std::floor((src.origin_y - y) / src.pixel_size));
    if (col < 0 || col >= src.width || row < 0 || row >= src.height)
        return band.nodata ? *band.nodata : std::nan("");
    return band.values[src.index(row, col)];
}

double resample_bilinear(const GeoGrid& src, const Band& band, double x, double y) {
    // Continuous pixel coordinates with pixel centers at integer positions.
    const double u = (x - src.origin_x) / src.pixel_size - 0.5;
    const double v = (src.origin_y - y) / src.pixel_size - 0.5;
    if (u < -0.5 || u > src.width - 0.5 || v < -0.5 || v > src.height - 0.5)
        return band.nodata ? *band.nodata : std::nan("");
    // Clamp to the edge so constants stay exact on border pixels.
    const double cu = std::clamp(u, 0.0, static_cast<double>(src.width - 1));
    const double cv = std::clamp(v, 0.0, static_cast<double>(src.height - 1));
    const int c0 = std::min(static_cast<int>(std::floor(cu)), src.width - 1);
    const int r0 = std::min(static_cast<int>(std::floor(cv)), src.height - 1);
    const int c1 = std::min(c0 + 1, src.width - 1);
    const int r1 = std::min(r0 + 1, src.height - 1);
    const double fx = cu - c0;
    const double fy = cv - r0;

    const double v00 = band.values[src.index(r0, c0)];
    const double v01 = band.values[src.index(r0, c1)];
    const double v10 = band.values[src.index(r1, c0)];
    const double v11 = band.values[src.index(r1, c1)];
    if (band.is_nodata(v00) || band.is_nodata(v01) || band.is_nodata(v10) || band.is_nodata(v11))
        return band.nodata ? *band.nodata : std::nan("");

    const double top = v00 + (v01 - v00) * fx;
    const double bottom = v10 + (v11 - v10) * fx;
    return top + (bottom - top) * fy;
}

} // namespace

GeoGrid resample_to(const GeoGrid& grid, double target_pixel_size, const Extent& target_extent) {
    grid.validate();
    if (target_pixel_size <= 0) throw std::runtime_error("target pixel size must be positive");
    require_pixel_aligned(target_extent.width(), target_pixel_size, "x");
    require_pixel_aligned(target_extent.height(), target_pixel_size, "y");
    if (!grid.extent().intersects(target_extent))
        throw std::runtime_error("empty intersection between grid and target extent");

    GeoGrid out(round_to_int(target_extent.width() / target_pixel_size),
                round_to_int(target_extent.height() / target_pixel_size),
                target_pixel_size, target_extent.min_x, target_extent.max_y, grid.epsg);

    for (const Band& band : grid.bands) {
        Band out_band = band;
        out_band.values.assign(out.pixel_count(), 0.0);
        const bool categorical = band.kind == BandKind::Categorical;
        for (int r = 0; r < out.height; ++r) {
            const double y = out.pixel_y(r);
            for (int c = 0; c < out.width; ++c) {
                const double x = out.pixel_x(c);
                out_band.values[out.index(r, c)] =
                    categorical ? resample_nearest(grid, band, x, y)
                                : resample_bilinear(grid, band, x, y);
            }
        }
        out.bands.push_back(std::move(out_band));
    }
    return out;
}

GeoGrid stack(const std::vector<GeoGrid>& grids, const std::vector<std::string>& order) {
    if (grids.empty()) throw std::runtime_error("stack: no input grids");
    for (const GeoGrid& g : grids) require_co_registered(grids.front(), g);

    GeoGrid out(grids.front().width, grids.front().height, grids.front().pixel_size,
                grids.front().origin_x, grids.front().origin_y, grids.front().epsg);
    for (const std::string& name : order) {
        const auto [tag, score_class] = tag_from_string(name);
        const Band* found = nullptr;
        for (const GeoGrid& g : grids) {
            for (const Band& band : g.bands) {
                if (band.tag == tag && (tag != Tag::Score || band.score_class == score_class)) {
                    found = &band;
                    break;
                }
            }
            if (found) break;
        }
        if (!found) throw std::runtime_error("stack: missing requested tag " + name);
        out.bands.push_back(*found);
    }
    return out;
}

} // namespace habitat
