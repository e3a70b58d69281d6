#include "habitat/terrain.hpp"

#include <cmath>

namespace habitat::terrain {

namespace {

constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

const Band& single_continuous_band(const GeoGrid& grid, const char* what) {
    if (grid.bands.size() != 1)
        throw std::runtime_error(std::string(what) + " expects a single-band grid");
    if (grid.bands[0].kind != BandKind::Continuous)
        throw std::runtime_error(std::string(what) + " expects a continuous band");
    return grid.bands[0];
}

GeoGrid derived_like(const GeoGrid& src, Tag tag) {
    GeoGrid out(src.width, src.height, src.pixel_size, src.origin_x, src.origin_y, src.epsg);
    Band& band = out.add_band(BandKind::Continuous, tag, kNoData);
    band.nodata = kNoData;
    return out;
}

} // namespace

GeoGrid ndsm(const GeoGrid& dsm, const GeoGrid& dtm) {
    require_co_registered(dsm, dtm);
    const Band& surface = single_continuous_band(dsm, "ndsm");
    const Band& ground = single_continuous_band(dtm, "ndsm");

    GeoGrid out = derived_like(dtm, Tag::NDSM);
    Band& band = out.bands[0];
    for (std::size_t i = 0; i < band.values.size(); ++i) {
        const double s = surface.values[i];
        const double g = ground.values[i];
        if (surface.is_nodata(s) || ground.is_nodata(g)) continue;  // stays nodata
        const double h = s - g;
        // Below -0.5 m is misregistration, not vegetation; zero it. Small
        // negatives from sensor noise pass through.
        band.values[i] = h < -0.5 ? 0.0 : h;
    }
    return out;
}

namespace {

// 3x3 neighborhood around (row, col); false when any cell is nodata.
bool fetch_window(const GeoGrid& grid, const Band& band, int row, int col, double z[9]) {
    int k = 0;
    for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
            const double v = band.values[grid.index(row + dr, col + dc)];
            if (band.is_nodata(v)) return false;
            z[k++] = v;
        }
    }
    return true;
}

} // namespace

SlopeAspect slope_aspect(const GeoGrid& dtm) {
    const Band& band = single_continuous_band(dtm, "slope_aspect");
    if (dtm.width < 3 || dtm.height < 3)
        throw std::runtime_error("slope_aspect: grid smaller than 3x3");

    SlopeAspect result{derived_like(dtm, Tag::Slope), derived_like(dtm, Tag::Aspect)};
    Band& slope = result.slope.bands[0];
    Band& aspect = result.aspect.bands[0];
    const double denom = 8.0 * dtm.pixel_size;

    for (int row = 1; row < dtm.height - 1; ++row) {
        for (int col = 1; col < dtm.width - 1; ++col) {
            double z[9];  // z[0]=NW z[1]=N z[2]=NE z[3]=W z[4]=C z[5]=E z[6]=SW z[7]=S z[8]=SE
            if (!fetch_window(dtm, band, row, col, z)) continue;
            // Horn 1981 weighted differences; rows run south, so north is -row.
            const double gx = ((z[2] + 2 * z[5] + z[8]) - (z[0] + 2 * z[3] + z[6])) / denom;
            const double gy = ((z[0] + 2 * z[1] + z[2]) - (z[6] + 2 * z[7] + z[8])) / denom;
            const std::size_t i = dtm.index(row, col);
            slope.values[i] = std::atan(std::hypot(gx, gy)) * kRadToDeg;
            if (gx == 0.0 && gy == 0.0) {
                aspect.values[i] = kFlatAspect;
            } else {
                // Compass bearing of the downslope vector (-gx, -gy).
                double bearing = std::atan2(-gx, -gy) * kRadToDeg;
                if (bearing < 0) bearing += 360.0;
                if (bearing >= 360.0) bearing -= 360.0;
                aspect.values[i] = bearing;
            }
        }
    }
    return result;
}

GeoGrid roughness(const GeoGrid& dtm, int window) {
    const Band& band = single_continuous_band(dtm, "roughness");
    if (window < 3 || window % 2 == 0)
        throw std::runtime_error("roughness: window must be odd and >= 3");
    if (window > dtm.width || window > dtm.height)
        throw std::runtime_error("roughness: window larger than grid");

    GeoGrid out = derived_like(dtm, Tag::Roughness);
    Band& rough = out.bands[0];
    const int half = window / 2;
    const int n = window * window;

    for (int row = half; row < dtm.height - half; ++row) {
        for (int col = half; col < dtm.width - half; ++col) {
            double sum = 0.0, sum_sq = 0.0;
            bool valid = true;
            for (int dr = -half; dr <= half && valid; ++dr) {
                for (int dc = -half; dc <= half; ++dc) {
                    const double v = band.values[dtm.index(row + dr, col + dc)];
                    if (band.is_nodata(v)) { valid = false; break; }
                    sum += v;
                    sum_sq += v * v;
                }
            }
            if (!valid) continue;
            const double mean = sum / n;
            const double variance = std::max(0.0, sum_sq / n - mean * mean);
            rough.values[out.index(row, col)] = std::sqrt(variance);
        }
    }
    return out;
}

GeoGrid curvature(const GeoGrid& dtm) {
    const Band& band = single_continuous_band(dtm, "curvature");
    if (dtm.width < 3 || dtm.height < 3)
        throw std::runtime_error("curvature: grid smaller than 3x3");

    GeoGrid out = derived_like(dtm, Tag::Curvature);
    Band& curv = out.bands[0];
    const double cell_sq = dtm.pixel_size * dtm.pixel_size;

    for (int row = 1; row < dtm.height - 1; ++row) {
        for (int col = 1; col < dtm.width - 1; ++col) {
            double z[9];
            if (!fetch_window(dtm, band, row, col, z)) continue;
            // Zevenbergen & Thorne 1987 quadratic coefficients:
            //   D = ((zW + zE)/2 - zC) / L^2,  E = ((zN + zS)/2 - zC) / L^2
            const double d = ((z[3] + z[5]) / 2.0 - z[4]) / cell_sq;
            const double e = ((z[1] + z[7]) / 2.0 - z[4]) / cell_sq;
            // General curvature, sign flipped so peaks are positive.
            curv.values[out.index(row, col)] = -2.0 * (d + e);
        }
    }
    return out;
}

} // namespace habitat::terrain
