#include "habitat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "habitat/rng.hpp"

namespace habitat {

namespace {

// Streams of the counter-based generator; keeps t1, transition, and
// perturbation draws independent for the same seed.
constexpr std::uint64_t kStreamT1 = 1;
constexpr std::uint64_t kStreamTransition = 2;
constexpr std::uint64_t kStreamNoiseGate = 3;
constexpr std::uint64_t kStreamNoiseClass = 4;

} // namespace

void SceneSpec::validate() const {
    if (width <= 0 || height <= 0) throw std::runtime_error("scene: dimensions must be positive");
    if (superpixel_size < 1) throw std::runtime_error("scene: superpixel_size must be >= 1");
    if (class_frequencies.empty()) throw std::runtime_error("scene: class_frequencies empty");
    double sum = 0.0;
    for (double f : class_frequencies) {
        if (f < 0) throw std::runtime_error("scene: negative class frequency");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::runtime_error("scene: class frequencies must sum to 1");
    std::vector<double> rate_per_class(class_frequencies.size(), 0.0);
    for (const TransitionEvent& e : transition_events) {
        if (e.from_id < 0 || e.from_id >= num_classes() || e.to_id < 0 || e.to_id >= num_classes())
            throw std::runtime_error("scene: transition event references absent class " +
                                     std::to_string(e.from_id < 0 || e.from_id >= num_classes()
                                                        ? e.from_id : e.to_id));
        if (e.rate < 0 || e.rate > 1)
            throw std::runtime_error("scene: event rate outside [0,1]");
        rate_per_class[e.from_id] += e.rate;
        if (rate_per_class[e.from_id] > 1.0 + 1e-12)
            throw std::runtime_error("scene: cumulative event rate for class " +
                                     std::to_string(e.from_id) + " exceeds 1");
    }
}

SceneSpec SceneSpec::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    SceneSpec spec;
    const std::vector<std::string> known{"width", "height", "superpixel_size",
                                         "class_frequencies", "transition_events", "seed"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw std::runtime_error("scene: unknown key '" + it.key() + "'");
    }
    spec.width = j.at("width").get<int>();
    spec.height = j.at("height").get<int>();
    if (j.contains("superpixel_size")) spec.superpixel_size = j["superpixel_size"].get<int>();
    spec.class_frequencies = j.at("class_frequencies").get<std::vector<double>>();
    if (j.contains("transition_events")) {
        for (const auto& e : j["transition_events"]) {
            spec.transition_events.push_back({e.at("from_id").get<int>(),
                                              e.at("to_id").get<int>(),
                                              e.at("rate").get<double>()});
        }
    }
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    spec.validate();
    return spec;
}

SceneSpec SceneSpec::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene spec: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::string SceneSpec::to_json_text() const {
    nlohmann::ordered_json j;
    j["width"] = width;
    j["height"] = height;
    j["superpixel_size"] = superpixel_size;
    j["class_frequencies"] = class_frequencies;
    j["transition_events"] = nlohmann::ordered_json::array();
    for (const TransitionEvent& e : transition_events) {
        j["transition_events"].push_back({{"from_id", e.from_id},
                                          {"to_id", e.to_id},
                                          {"rate", e.rate}});
    }
    j["seed"] = seed;
    return j.dump(2);
}

namespace {

struct SuperpixelLayout {
    int cells_x = 0;
    int cells_y = 0;
    std::uint64_t cell_of(int row, int col, int size) const {
        return static_cast<std::uint64_t>(row / size) * cells_x + (col / size);
    }
};

SuperpixelLayout layout_for(const SceneSpec& spec) {
    SuperpixelLayout l;
    l.cells_x = (spec.width + spec.superpixel_size - 1) / spec.superpixel_size;
    l.cells_y = (spec.height + spec.superpixel_size - 1) / spec.superpixel_size;
    return l;
}

int draw_class(const std::vector<double>& frequencies, double u) {
    double cum = 0.0;
    for (std::size_t k = 0; k < frequencies.size(); ++k) {
        cum += frequencies[k];
        if (u < cum) return static_cast<int>(k);
    }
    // Guard against cumulative rounding; the last non-zero class wins.
    for (std::size_t k = frequencies.size(); k-- > 0;) {
        if (frequencies[k] > 0) return static_cast<int>(k);
    }
    return 0;
}

} // namespace

GeoGrid generate_t1(const SceneSpec& spec) {
    spec.validate();
    const SuperpixelLayout layout = layout_for(spec);

    // One class draw per superpixel, keyed by superpixel index.
    std::vector<int> cell_class(static_cast<std::size_t>(layout.cells_x) * layout.cells_y);
    for (std::size_t cell = 0; cell < cell_class.size(); ++cell) {
        const double u = rng::counter_uniform(spec.seed, kStreamT1, cell);
        cell_class[cell] = draw_class(spec.class_frequencies, u);
    }

    GeoGrid grid(spec.width, spec.height, 0.2);
    Band& band = grid.add_band(BandKind::Categorical, Tag::Label);
    band.nodata = kLabelNoData;
    for (int row = 0; row < spec.height; ++row) {
        for (int col = 0; col < spec.width; ++col) {
            band.values[grid.index(row, col)] =
                cell_class[layout.cell_of(row, col, spec.superpixel_size)];
        }
    }
    return grid;
}

BiTemporalScene apply_transitions(const GeoGrid& t1, const SceneSpec& spec,
                                  const TransitionRuleSet& rules) {
    spec.validate();
    if (t1.bands.size() != 1 || t1.bands[0].kind != BandKind::Categorical)
        throw std::runtime_error("apply_transitions expects a categorical t1 grid");
    if (t1.width != spec.width || t1.height != spec.height)
        throw std::runtime_error("apply_transitions: t1 does not match scene dimensions");
    const Band& src = t1.bands[0];
    const SuperpixelLayout layout = layout_for(spec);

    // Per-class cumulative event table; at most one event fires per cell.
    std::vector<std::vector<std::pair<double, int>>> cdf(spec.num_classes());
    for (const TransitionEvent& e : spec.transition_events) {
        const double prev = cdf[e.from_id].empty() ? 0.0 : cdf[e.from_id].back().first;
        cdf[e.from_id].emplace_back(prev + e.rate, e.to_id);
    }

    const std::size_t cell_count = static_cast<std::size_t>(layout.cells_x) * layout.cells_y;
    std::vector<int> cell_target(cell_count, -1);  // -1 = unchanged
    for (std::size_t cell = 0; cell < cell_count; ++cell) {
        const int row = static_cast<int>(cell / layout.cells_x) * spec.superpixel_size;
        const int col = static_cast<int>(cell % layout.cells_x) * spec.superpixel_size;
        const double v = src.values[t1.index(row, col)];
        if (src.is_nodata(v)) continue;
        const int cls = static_cast<int>(v);
        if (cls >= spec.num_classes() || cdf[cls].empty()) continue;
        const double u = rng::counter_uniform(spec.seed, kStreamTransition, cell);
        for (const auto& [cum, target] : cdf[cls]) {
            if (u < cum) {
                cell_target[cell] = target;
                break;
            }
        }
    }

    BiTemporalScene scene;
    scene.t2 = t1;
    scene.truth = GeoGrid(t1.width, t1.height, t1.pixel_size, t1.origin_x, t1.origin_y, t1.epsg);
    Band& truth_band = scene.truth.add_band(BandKind::Categorical, Tag::Label, kLabelNoData);
    truth_band.nodata = kLabelNoData;
    Band& t2_band = scene.t2.bands[0];

    for (int row = 0; row < t1.height; ++row) {
        for (int col = 0; col < t1.width; ++col) {
            const std::size_t i = t1.index(row, col);
            const double v = src.values[i];
            if (src.is_nodata(v)) continue;
            const int from = static_cast<int>(v);
            const int target = cell_target[layout.cell_of(row, col, spec.superpixel_size)];
            if (target >= 0) {
                t2_band.values[i] = target;
                truth_band.values[i] = rules.map_pair(from, target);
            } else {
                truth_band.values[i] = rules.no_change_id();
            }
        }
    }
    return scene;
}

GeoGrid perturb_predictions(const GeoGrid& labels, double noise_rate, std::uint64_t seed,
                            int num_classes) {
    if (noise_rate < 0 || noise_rate > 1)
        throw std::runtime_error("perturb_predictions: noise_rate outside [0,1]");
    if (labels.bands.size() != 1 || labels.bands[0].kind != BandKind::Categorical)
        throw std::runtime_error("perturb_predictions expects a categorical grid");
    const Band& src = labels.bands[0];

    int k = num_classes;
    if (k <= 0) {
        double max_label = 0;
        for (double v : src.values) {
            if (!src.is_nodata(v)) max_label = std::max(max_label, v);
        }
        k = static_cast<int>(max_label) + 1;
    }
    if (k < 2 && noise_rate > 0)
        throw std::runtime_error("perturb_predictions: need at least two classes to flip");

    GeoGrid out = labels;
    Band& dst = out.bands[0];
    for (std::size_t i = 0; i < dst.values.size(); ++i) {
        const double v = dst.values[i];
        if (src.is_nodata(v)) continue;
        if (rng::counter_uniform(seed, kStreamNoiseGate, i) >= noise_rate) continue;
        // Uniform over the k-1 other classes.
        const double u = rng::counter_uniform(seed, kStreamNoiseClass, i);
        int pick = static_cast<int>(u * (k - 1));
        if (pick >= k - 1) pick = k - 2;
        if (pick >= static_cast<int>(v)) ++pick;
        dst.values[i] = pick;
    }
    return out;
}

} // namespace habitat
