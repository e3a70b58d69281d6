#include "habitat/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "habitat/csv.hpp"
#include "habitat/rng.hpp"
#include "habitat/taxonomy.hpp"

namespace habitat {

PixelRect BlockPartition::block_rect(int block_row, int block_col) const {
    PixelRect r;
    r.row = block_row * block_size;
    r.col = block_col * block_size;
    r.height = std::min(block_size, raster_height - r.row);
    r.width = std::min(block_size, raster_width - r.col);
    return r;
}

BlockPartition partition_blocks(int raster_width, int raster_height, int block_size) {
    if (raster_width <= 0 || raster_height <= 0)
        throw std::runtime_error("partition_blocks: extent must be positive");
    if (block_size <= 0) throw std::runtime_error("partition_blocks: block_size must be positive");
    BlockPartition p;
    p.raster_width = raster_width;
    p.raster_height = raster_height;
    p.block_size = block_size;
    p.blocks_x = (raster_width + block_size - 1) / block_size;
    p.blocks_y = (raster_height + block_size - 1) / block_size;
    return p;
}

std::string role_to_string(Role role) {
    switch (role) {
        case Role::Train: return "train";
        case Role::Val: return "val";
        case Role::Test: return "test";
    }
    return "train";
}

Role role_from_string(const std::string& text) {
    if (text == "train") return Role::Train;
    if (text == "val") return Role::Val;
    if (text == "test") return Role::Test;
    throw std::runtime_error("unknown split role: " + text);
}

Role SplitAssignment::role_of(int block_row, int block_col) const {
    return roles[static_cast<std::size_t>(block_row) * partition.blocks_x + block_col];
}

std::array<int, 3> SplitAssignment::counts() const {
    std::array<int, 3> n{0, 0, 0};
    for (Role r : roles) ++n[static_cast<int>(r)];
    return n;
}

void SplitAssignment::to_csv(const std::string& path) const {
    std::vector<csv::Row> rows{{"block_row", "block_col", "role"}};
    for (int br = 0; br < partition.blocks_y; ++br) {
        for (int bc = 0; bc < partition.blocks_x; ++bc) {
            rows.push_back({std::to_string(br), std::to_string(bc),
                            role_to_string(role_of(br, bc))});
        }
    }
    csv::write_file(path, rows);
}

SplitAssignment SplitAssignment::from_csv(const std::string& path, const BlockPartition& partition) {
    const auto rows = csv::read_file(path);
    if (rows.empty() || rows[0].size() < 3 || rows[0][0] != "block_row")
        throw std::runtime_error("bad split CSV header in " + path);
    SplitAssignment a;
    a.partition = partition;
    a.roles.assign(static_cast<std::size_t>(partition.block_count()), Role::Train);
    std::vector<bool> seen(a.roles.size(), false);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < 3) throw std::runtime_error("short row in " + path);
        const int br = std::stoi(rows[i][0]);
        const int bc = std::stoi(rows[i][1]);
        if (br < 0 || br >= partition.blocks_y || bc < 0 || bc >= partition.blocks_x)
            throw std::runtime_error("block index out of range in " + path);
        const std::size_t idx = static_cast<std::size_t>(br) * partition.blocks_x + bc;
        a.roles[idx] = role_from_string(rows[i][2]);
        seen[idx] = true;
    }
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
        throw std::runtime_error("split CSV does not cover every block: " + path);
    return a;
}

SplitAssignment assign_split(const BlockPartition& partition, std::uint64_t seed,
                             const std::array<double, 3>& fractions) {
    const int n = partition.block_count();
    if (n == 0) throw std::runtime_error("assign_split: no blocks");
    for (double f : fractions) {
        if (f <= 0) throw std::runtime_error("assign_split: fractions must be positive");
    }
    const double sum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::runtime_error("assign_split: fractions must sum to 1");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 gen(seed);
    rng::shuffle(order, gen);

    // Round half up for the train and val targets; test takes the remainder.
    const int n_train = static_cast<int>(std::floor(n * fractions[0] + 0.5));
    const int n_val = static_cast<int>(std::floor(n * fractions[1] + 0.5));
    if (n_train + n_val > n)
        throw std::runtime_error("assign_split: rounded fractions exceed block count");

    SplitAssignment a;
    a.partition = partition;
    a.seed = seed;
    a.fractions = fractions;
    a.roles.assign(static_cast<std::size_t>(n), Role::Test);
    for (int i = 0; i < n_train; ++i) a.roles[order[i]] = Role::Train;
    for (int i = n_train; i < n_train + n_val; ++i) a.roles[order[i]] = Role::Val;
    return a;
}

GeoGrid mask_by_split(const GeoGrid& grid, const SplitAssignment& assignment, Role role) {
    const BlockPartition& p = assignment.partition;
    if (p.raster_width != grid.width || p.raster_height != grid.height)
        throw std::runtime_error("mask_by_split: assignment does not cover grid extent");

    GeoGrid out = grid;
    for (Band& band : out.bands) {
        if (!band.nodata)
            band.nodata = band.kind == BandKind::Categorical ? kLabelNoData : -9999.0;
    }
    for (int br = 0; br < p.blocks_y; ++br) {
        for (int bc = 0; bc < p.blocks_x; ++bc) {
            if (assignment.role_of(br, bc) == role) continue;
            const PixelRect r = p.block_rect(br, bc);
            for (Band& band : out.bands) {
                for (int row = r.row; row < r.row + r.height; ++row) {
                    std::fill_n(band.values.begin() + out.index(row, r.col), r.width,
                                *band.nodata);
                }
            }
        }
    }
    return out;
}

std::vector<int> patch_positions(int extent, int patch_size, int stride) {
    std::vector<int> positions;
    int pos = 0;
    while (true) {
        if (pos + patch_size >= extent) {
            positions.push_back(extent - patch_size);  // clamp the final patch
            break;
        }
        positions.push_back(pos);
        pos += stride;
    }
    return positions;
}

void PatchIndex::to_csv(const std::string& path) const {
    std::vector<csv::Row> rows{{"row", "col"}};
    for (const auto& [row, col] : origins)
        rows.push_back({std::to_string(row), std::to_string(col)});
    csv::write_file(path, rows);
}

PatchIndex PatchIndex::from_csv(const std::string& path, int patch_size, int overlap,
                                int raster_width, int raster_height) {
    const auto rows = csv::read_file(path);
    if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "row")
        throw std::runtime_error("bad patch index CSV header in " + path);
    PatchIndex index;
    index.patch_size = patch_size;
    index.overlap = overlap;
    index.raster_width = raster_width;
    index.raster_height = raster_height;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < 2) throw std::runtime_error("short row in " + path);
        index.origins.emplace_back(std::stoi(rows[i][0]), std::stoi(rows[i][1]));
    }
    return index;
}

PatchSet extract_patches(const GeoGrid& grid, int patch_size, int overlap) {
    if (patch_size <= 0) throw std::runtime_error("extract_patches: patch_size must be positive");
    if (overlap < 0 || overlap >= patch_size)
        throw std::runtime_error("extract_patches: overlap must satisfy 0 <= overlap < patch_size");
    if (grid.width < patch_size || grid.height < patch_size)
        throw std::runtime_error("extract_patches: grid smaller than patch");

    PatchSet set;
    set.index.patch_size = patch_size;
    set.index.overlap = overlap;
    set.index.raster_width = grid.width;
    set.index.raster_height = grid.height;

    const int stride = patch_size - overlap;
    const auto rows = patch_positions(grid.height, patch_size, stride);
    const auto cols = patch_positions(grid.width, patch_size, stride);
    for (int row : rows) {
        for (int col : cols) {
            set.index.origins.emplace_back(row, col);
            GeoGrid patch(patch_size, patch_size, grid.pixel_size,
                          grid.origin_x + col * grid.pixel_size,
                          grid.origin_y - row * grid.pixel_size, grid.epsg);
            for (const Band& band : grid.bands) {
                Band pb = band;
                pb.values.resize(patch.pixel_count());
                for (int r = 0; r < patch_size; ++r) {
                    std::copy_n(band.values.begin() + grid.index(row + r, col),
                                patch_size, pb.values.begin() + patch.index(r, 0));
                }
                patch.bands.push_back(std::move(pb));
            }
            set.patches.push_back(std::move(patch));
        }
    }
    return set;
}

namespace {

void check_patch_set(const std::vector<GeoGrid>& patches, const PatchIndex& index) {
    if (patches.size() != index.origins.size())
        throw std::runtime_error("mosaic: patch count does not match index");
    for (std::size_t i = 0; i < patches.size(); ++i) {
        const auto& [row, col] = index.origins[i];
        if (row < 0 || col < 0 || row + index.patch_size > index.raster_height ||
            col + index.patch_size > index.raster_width)
            throw std::runtime_error("mosaic: patch outside raster extent");
        if (patches[i].width != index.patch_size || patches[i].height != index.patch_size)
            throw std::runtime_error("mosaic: patch dimensions do not match index");
    }
}

// Patch ids covering each raster row; keeps the per-pixel scan small.
std::vector<std::vector<int>> patches_by_row(const PatchIndex& index) {
    std::vector<std::vector<int>> cover(index.raster_height);
    for (std::size_t i = 0; i < index.origins.size(); ++i) {
        const int start = index.origins[i].first;
        for (int r = start; r < start + index.patch_size; ++r)
            cover[r].push_back(static_cast<int>(i));
    }
    return cover;
}

} // namespace

GeoGrid mosaic_labels(const std::vector<GeoGrid>& patches, const PatchIndex& index) {
    check_patch_set(patches, index);
    for (const GeoGrid& p : patches) {
        if (p.bands.size() != 1 || p.bands[0].kind != BandKind::Categorical)
            throw std::runtime_error("mosaic_labels expects single categorical band patches");
    }

    GeoGrid out(index.raster_width, index.raster_height,
                patches.empty() ? 1.0 : patches[0].pixel_size);
    if (!patches.empty()) {
        out.epsg = patches[0].epsg;
        // Recover the full-grid origin from the first patch and its offset.
        out.origin_x = patches[0].origin_x - index.origins[0].second * patches[0].pixel_size;
        out.origin_y = patches[0].origin_y + index.origins[0].first * patches[0].pixel_size;
    }
    Band& band = out.add_band(BandKind::Categorical, Tag::Label, kLabelNoData);
    band.nodata = kLabelNoData;

    const auto row_cover = patches_by_row(index);
    std::vector<int> votes_value;
    std::vector<int> votes_count;
    for (int row = 0; row < out.height; ++row) {
        for (int col = 0; col < out.width; ++col) {
            votes_value.clear();
            votes_count.clear();
            bool any = false;
            bool any_nodata = false;
            for (int i : row_cover[row]) {
                const auto& [pr, pc] = index.origins[i];
                if (pc <= col && col < pc + index.patch_size) {
                    any = true;
                    const Band& pb = patches[i].bands[0];
                    const double v = pb.values[patches[i].index(row - pr, col - pc)];
                    if (pb.is_nodata(v)) { any_nodata = true; continue; }
                    const int label = static_cast<int>(v);
                    auto it = std::find(votes_value.begin(), votes_value.end(), label);
                    if (it == votes_value.end()) {
                        votes_value.push_back(label);
                        votes_count.push_back(1);
                    } else {
                        ++votes_count[it - votes_value.begin()];
                    }
                }
            }
            if (!any) throw std::runtime_error("mosaic_labels: coverage gap at pixel (" +
                                               std::to_string(row) + "," + std::to_string(col) + ")");
            if (votes_value.empty()) {
                if (!any_nodata)
                    throw std::runtime_error("mosaic_labels: no votes at covered pixel");
                continue;  // all covering patches are nodata here
            }
            // Majority vote, ties to the lowest class id.
            int best = votes_value[0], best_count = votes_count[0];
            for (std::size_t i = 1; i < votes_value.size(); ++i) {
                if (votes_count[i] > best_count ||
                    (votes_count[i] == best_count && votes_value[i] < best)) {
                    best = votes_value[i];
                    best_count = votes_count[i];
                }
            }
            band.values[out.index(row, col)] = best;
        }
    }
    return out;
}

GeoGrid mosaic_scores(const std::vector<GeoGrid>& patches, const PatchIndex& index) {
    check_patch_set(patches, index);
    if (patches.empty()) throw std::runtime_error("mosaic_scores: no patches");
    const std::size_t k = patches[0].bands.size();
    if (k == 0) throw std::runtime_error("mosaic_scores: patches carry no score bands");
    for (const GeoGrid& p : patches) {
        if (p.bands.size() != k)
            throw std::runtime_error("mosaic_scores: score channel count mismatch");
    }

    GeoGrid out(index.raster_width, index.raster_height, patches[0].pixel_size);
    out.epsg = patches[0].epsg;
    out.origin_x = patches[0].origin_x - index.origins[0].second * patches[0].pixel_size;
    out.origin_y = patches[0].origin_y + index.origins[0].first * patches[0].pixel_size;
    Band& band = out.add_band(BandKind::Categorical, Tag::Label, kLabelNoData);
    band.nodata = kLabelNoData;

    auto row_cover = patches_by_row(index);
    // Canonical accumulation order (by patch origin) so the result is
    // invariant under permutations of the patch list.
    for (auto& ids : row_cover) {
        std::sort(ids.begin(), ids.end(), [&](int a, int b) {
            return index.origins[a] < index.origins[b];
        });
    }
    std::vector<double> sums(k);
    for (int row = 0; row < out.height; ++row) {
        for (int col = 0; col < out.width; ++col) {
            std::fill(sums.begin(), sums.end(), 0.0);
            int covering = 0;
            for (int i : row_cover[row]) {
                const auto& [pr, pc] = index.origins[i];
                if (pc <= col && col < pc + index.patch_size) {
                    ++covering;
                    const std::size_t pi = patches[i].index(row - pr, col - pc);
                    for (std::size_t b = 0; b < k; ++b)
                        sums[b] += patches[i].bands[b].values[pi];
                }
            }
            if (covering == 0)
                throw std::runtime_error("mosaic_scores: coverage gap at pixel (" +
                                         std::to_string(row) + "," + std::to_string(col) + ")");
            // Mean then argmax; ties to the lowest class id.
            int best = 0;
            double best_mean = sums[0] / covering;
            for (std::size_t b = 1; b < k; ++b) {
                const double mean = sums[b] / covering;
                if (mean > best_mean) {
                    best = static_cast<int>(b);
                    best_mean = mean;
                }
            }
            band.values[out.index(row, col)] = best;
        }
    }
    return out;
}

} // namespace habitat
