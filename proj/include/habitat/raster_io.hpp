#pragma once

#include <string>

#include "habitat/geogrid.hpp"

namespace habitat {

/// Reads a raster file. Dispatches on extension: .tif/.tiff GeoTIFF,
/// .grid plain-text grid. Throws on unsupported formats, missing
/// geotransform, anisotropic pixels, or compressed/tiled TIFFs.
GeoGrid read_raster(const std::string& path);

/// Writes a raster file (same extension dispatch). GeoTIFF output is
/// little-endian, uncompressed, chunky, one strip. read_raster(write_raster(g))
/// reproduces g bit-exactly: integer bands verbatim, float bands within 0 ULP
/// (values pass through float32 storage unchanged).
void write_raster(const GeoGrid& grid, const std::string& path);

// Format-specific entry points (used by tests and the text-fixture tooling).
GeoGrid read_geotiff(const std::string& path);
void write_geotiff(const GeoGrid& grid, const std::string& path);
GeoGrid read_text_grid(const std::string& path);
void write_text_grid(const GeoGrid& grid, const std::string& path);

} // namespace habitat
