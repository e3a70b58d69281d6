#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "habitat/geogrid.hpp"

namespace habitat {

struct PixelRect {
    int row = 0, col = 0, height = 0, width = 0;
};

/// Contiguous square blocks tiling a raster extent; edge blocks may be
/// smaller. Blocks are ordered row-major by block index.
struct BlockPartition {
    int raster_width = 0;
    int raster_height = 0;
    int block_size = 0;
    int blocks_x = 0;
    int blocks_y = 0;

    int block_count() const { return blocks_x * blocks_y; }
    PixelRect block_rect(int block_row, int block_col) const;
};

BlockPartition partition_blocks(int raster_width, int raster_height, int block_size);

enum class Role { Train, Val, Test };

std::string role_to_string(Role role);
Role role_from_string(const std::string& text);

/// Every block gets exactly one role. Deterministic in the seed: blocks are
/// shuffled row-major with mt19937_64 Fisher-Yates, then the first
/// round(N*f_train) go to train, the next round(N*f_val) to val, the rest to
/// test (round = half away from zero).
struct SplitAssignment {
    BlockPartition partition;
    std::vector<Role> roles;  // indexed block_row * blocks_x + block_col
    std::uint64_t seed = 0;
    std::array<double, 3> fractions{0.70, 0.15, 0.15};

    Role role_of(int block_row, int block_col) const;
    std::array<int, 3> counts() const;

    /// CSV columns: block_row,block_col,role; header row required.
    void to_csv(const std::string& path) const;
    static SplitAssignment from_csv(const std::string& path, const BlockPartition& partition);
};

SplitAssignment assign_split(const BlockPartition& partition, std::uint64_t seed,
                             const std::array<double, 3>& fractions = {0.70, 0.15, 0.15});

/// Returns a copy of `grid` with every pixel outside `role` blocks set to
/// the band's nodata sentinel (kLabelNoData is installed for bands lacking one).
GeoGrid mask_by_split(const GeoGrid& grid, const SplitAssignment& assignment, Role role);

/// Sliding-window patch origins: multiples of stride = patch_size - overlap,
/// with the final origin clamped so the far edge meets the raster edge.
/// Every pixel is covered by at least one patch.
struct PatchIndex {
    int patch_size = 256;
    int overlap = 64;
    int raster_width = 0;
    int raster_height = 0;
    std::vector<std::pair<int, int>> origins;  // (row, col)

    int stride() const { return patch_size - overlap; }

    /// CSV columns: row,col; header row required.
    void to_csv(const std::string& path) const;
    static PatchIndex from_csv(const std::string& path, int patch_size, int overlap,
                               int raster_width, int raster_height);
};

std::vector<int> patch_positions(int extent, int patch_size, int stride);

struct PatchSet {
    PatchIndex index;
    std::vector<GeoGrid> patches;  // same band layout as the source grid
};

PatchSet extract_patches(const GeoGrid& grid, int patch_size = 256, int overlap = 64);

/// Majority vote over all covering patches per pixel; ties to the lowest
/// class id. Throws on coverage gaps.
GeoGrid mosaic_labels(const std::vector<GeoGrid>& patches, const PatchIndex& index);

/// Per-class score averaging over covering patches, then argmax (ties to the
/// lowest class id). Every patch must carry the same number of score bands.
GeoGrid mosaic_scores(const std::vector<GeoGrid>& patches, const PatchIndex& index);

} // namespace habitat
