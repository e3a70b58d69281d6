#pragma once

// Test-only oracles, independent of the implementation paths they check:
// brute-force per-pixel metric counting, windowed statistics by direct
// formula, and deterministic random grid builders.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "habitat/geogrid.hpp"
#include "habitat/rng.hpp"

namespace oracle {

struct BruteForceMetrics {
    double overall_accuracy = 0.0;
    std::vector<std::optional<double>> iou, f1, recall, precision;
};

// Scans the pixel streams directly; never builds a confusion matrix.
inline BruteForceMetrics brute_force_metrics(const std::vector<int>& pred,
                                             const std::vector<int>& ref, int num_classes) {
    BruteForceMetrics m;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == ref[i]) ++agree;
    }
    m.overall_accuracy = static_cast<double>(agree) / static_cast<double>(pred.size());
    m.iou.resize(num_classes);
    m.f1.resize(num_classes);
    m.recall.resize(num_classes);
    m.precision.resize(num_classes);
    for (int k = 0; k < num_classes; ++k) {
        std::uint64_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == k && ref[i] == k) ++tp;
            else if (pred[i] == k) ++fp;
            else if (ref[i] == k) ++fn;
        }
        if (tp + fp + fn > 0) {
            m.iou[k] = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
            m.f1[k] = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
        }
        if (tp + fn > 0) m.recall[k] = static_cast<double>(tp) / static_cast<double>(tp + fn);
        if (tp + fp > 0) m.precision[k] = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    return m;
}

// Population standard deviation of a window by the direct two-pass formula.
inline double window_std(const std::vector<double>& values) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double acc = 0.0;
    for (double v : values) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(values.size()));
}

inline habitat::GeoGrid random_labels(int width, int height, int num_classes,
                                      std::uint64_t seed, double pixel_size = 1.0) {
    habitat::GeoGrid grid(width, height, pixel_size);
    habitat::Band& band = grid.add_band(habitat::BandKind::Categorical, habitat::Tag::Label);
    band.nodata = 255.0;
    std::mt19937_64 gen(seed);
    for (double& v : band.values)
        v = static_cast<double>(habitat::rng::bounded(gen, num_classes));
    return grid;
}

inline std::vector<int> band_as_ints(const habitat::GeoGrid& grid, int band = 0) {
    std::vector<int> out;
    out.reserve(grid.bands[band].values.size());
    for (double v : grid.bands[band].values) out.push_back(static_cast<int>(v));
    return out;
}

// 90-degree counterclockwise rotation (out[i][j] = in[j][W-1-i]).
inline habitat::GeoGrid rotate90_ccw(const habitat::GeoGrid& grid) {
    habitat::GeoGrid out(grid.height, grid.width, grid.pixel_size, grid.origin_x,
                         grid.origin_y, grid.epsg);
    for (const habitat::Band& band : grid.bands) {
        habitat::Band nb = band;
        nb.values.assign(out.pixel_count(), 0.0);
        for (int i = 0; i < out.height; ++i)
            for (int j = 0; j < out.width; ++j)
                nb.values[out.index(i, j)] = band.values[grid.index(j, grid.width - 1 - i)];
        out.bands.push_back(std::move(nb));
    }
    return out;
}

} // namespace oracle
