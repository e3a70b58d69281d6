#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "habitat/geogrid.hpp"
#include "habitat/taxonomy.hpp"

namespace habitat {

/// One flip rule of the synthetic scene: eligible superpixels (those whose
/// t1 class equals from_id) change to to_id with probability `rate`.
struct TransitionEvent {
    int from_id = 0;
    int to_id = 0;
    double rate = 0.0;
};

/// Parameters of the synthetic bi-temporal landscape generator. Class labels
/// are drawn per superpixel (square block) to mimic polygonal habitat
/// structure. Deterministic in the seed: draws use a SplitMix64 counter hash
/// per superpixel, so output is independent of traversal or worker order.
struct SceneSpec {
    int width = 0;
    int height = 0;
    int superpixel_size = 25;
    std::vector<double> class_frequencies;  // non-negative, sum to 1
    std::vector<TransitionEvent> transition_events;
    std::uint64_t seed = 0;

    int num_classes() const { return static_cast<int>(class_frequencies.size()); }
    void validate() const;

    static SceneSpec from_json_file(const std::string& path);
    static SceneSpec from_json_text(const std::string& text);
    std::string to_json_text() const;
};

/// Superpixels assigned classes i.i.d. per class_frequencies.
GeoGrid generate_t1(const SceneSpec& spec);

struct BiTemporalScene {
    GeoGrid t2;
    GeoGrid truth;  // transition category per pixel
};

/// Flips eligible superpixels per the event rates (at most one event fires
/// per superpixel; event rates for one from-class stack cumulatively and may
/// not exceed 1). The truth map carries the rule set's category for flipped
/// pixels and "No change" elsewhere.
BiTemporalScene apply_transitions(const GeoGrid& t1, const SceneSpec& spec,
                                  const TransitionRuleSet& rules);

/// Each pixel is independently replaced by a uniformly random *different*
/// class with probability noise_rate. num_classes <= 0 means "infer as
/// max label + 1". Nodata pixels are left untouched.
GeoGrid perturb_predictions(const GeoGrid& labels, double noise_rate, std::uint64_t seed,
                            int num_classes = 0);

} // namespace habitat
