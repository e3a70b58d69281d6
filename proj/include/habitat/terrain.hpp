#pragma once

#include "habitat/geogrid.hpp"

namespace habitat::terrain {

/// Aspect value stored for cells with zero gradient (aspect is undefined
/// on flat terrain).
inline constexpr double kFlatAspect = -1.0;
/// Nodata sentinel on all derived layers (border pixels, nodata inputs).
inline constexpr double kNoData = -9999.0;

/// Height above ground: DSM - DTM per pixel. Differences below -0.5 m are
/// treated as misregistration and clamped to 0; small negatives from sensor
/// noise pass through. Nodata in either input propagates.
GeoGrid ndsm(const GeoGrid& dsm, const GeoGrid& dtm);

struct SlopeAspect {
    GeoGrid slope;   // degrees, [0, 90]
    GeoGrid aspect;  // compass degrees [0, 360) of the downslope direction,
                     // 0 = north, 90 = east; kFlatAspect where gradient == 0
};

/// Horn 3x3 finite-difference gradient. Border pixels are nodata.
SlopeAspect slope_aspect(const GeoGrid& dtm);

/// Standard deviation (population) of elevations in an odd `window` around
/// each pixel. Border of window/2 pixels is nodata.
GeoGrid roughness(const GeoGrid& dtm, int window = 3);

/// Zevenbergen-Thorne general curvature from the 3x3 quadratic fit:
/// -2 * (D + E), units 1/m. Positive = convex (peak, ridge), negative =
/// concave (pit, valley). Border pixels are nodata.
GeoGrid curvature(const GeoGrid& dtm);

} // namespace habitat::terrain
