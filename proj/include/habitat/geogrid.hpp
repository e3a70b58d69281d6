#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace habitat {

/// Raised when a pipeline self-check fails (e.g. the synthetic generator's
/// truth map disagrees with the temporal comparison module). The CLI maps
/// this to exit code 3; everything else validation-like maps to 2.
class OracleViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BandKind { Categorical, Continuous };

/// Storage dtype used when the band is written to a raster file.
enum class DType { U8, U16, I32, F32 };

/// Band semantics. Score is parameterized by a class id (Band::score_class).
enum class Tag {
    None, R, G, B, NIR, DTM, DSM, NDSM, Slope, Aspect, Roughness, Curvature,
    Label, Score
};

std::string tag_to_string(Tag tag, int score_class = -1);
/// Parses "R", "NDSM", "SCORE:4", ... Throws on unknown names.
std::pair<Tag, int> tag_from_string(const std::string& text);

/// One raster band. Values are stored row-major as doubles regardless of
/// file dtype (all supported dtypes embed exactly in a double). A pixel is
/// nodata when it equals the sentinel or is NaN.
struct Band {
    BandKind kind = BandKind::Continuous;
    Tag tag = Tag::None;
    int score_class = -1;
    DType dtype = DType::F32;
    std::optional<double> nodata;
    std::vector<double> values;

    bool is_nodata(double v) const {
        return std::isnan(v) || (nodata && v == *nodata);
    }
};

/// Axis-aligned world-coordinate rectangle (meters, same CRS as the grid).
struct Extent {
    double min_x = 0, min_y = 0, max_x = 0, max_y = 0;

    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
    bool intersects(const Extent& o) const {
        return min_x < o.max_x && o.min_x < max_x && min_y < o.max_y && o.min_y < max_y;
    }
};

/// Georeferenced single- or multi-band grid with square pixels.
/// Origin is the world coordinate of the upper-left corner; rows run south,
/// columns run east. Values are immutable by convention once a grid has been
/// handed to an operation; all operations return new grids.
struct GeoGrid {
    int width = 0;
    int height = 0;
    double pixel_size = 1.0;         // meters per pixel, square
    double origin_x = 0.0;           // easting of upper-left corner
    double origin_y = 0.0;           // northing of upper-left corner
    int epsg = 32633;
    std::vector<Band> bands;

    GeoGrid() = default;
    GeoGrid(int w, int h, double px, double ox = 0.0, double oy = 0.0, int crs = 32633)
        : width(w), height(h), pixel_size(px), origin_x(ox), origin_y(oy), epsg(crs) {}

    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * width + col;
    }
    double at(int band, int row, int col) const {
        return bands[band].values[index(row, col)];
    }
    double& at(int band, int row, int col) {
        return bands[band].values[index(row, col)];
    }

    Extent extent() const {
        return {origin_x, origin_y - height * pixel_size,
                origin_x + width * pixel_size, origin_y};
    }
    /// World coordinate of a pixel center.
    double pixel_x(int col) const { return origin_x + (col + 0.5) * pixel_size; }
    double pixel_y(int row) const { return origin_y - (row + 0.5) * pixel_size; }

    Band& add_band(BandKind kind, Tag tag = Tag::None, double fill = 0.0);

    /// Throws std::runtime_error if basic invariants are violated.
    void validate() const;
};

/// Convenience: single-band grid filled with a constant.
GeoGrid make_grid(int width, int height, double pixel_size, BandKind kind,
                  double fill = 0.0, Tag tag = Tag::None);

/// True when the two grids live on the same analysis grid: equal pixel size,
/// dimensions, origin (within 1e-6 m) and CRS.
bool co_registered(const GeoGrid& a, const GeoGrid& b);
/// Throws "grids not co-registered" unless co_registered(a, b).
void require_co_registered(const GeoGrid& a, const GeoGrid& b);

/// Resamples every band of `grid` onto the target grid defined by
/// `target_pixel_size` and `target_extent` (which must span an integer
/// number of target pixels). Categorical bands use nearest-neighbor,
/// continuous bands bilinear interpolation; any nodata input to the bilinear
/// kernel makes the output pixel nodata. Target pixels outside the source
/// extent become nodata (the band must carry a sentinel).
GeoGrid resample_to(const GeoGrid& grid, double target_pixel_size, const Extent& target_extent);

/// Stacks bands from several co-registered grids into one multi-band grid,
/// in exactly the requested tag order. Tags must be unambiguous across the
/// inputs; the first grid carrying a tag wins.
GeoGrid stack(const std::vector<GeoGrid>& grids, const std::vector<std::string>& order);

} // namespace habitat
