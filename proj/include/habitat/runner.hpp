#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "habitat/metrics.hpp"
#include "habitat/sampling.hpp"
#include "habitat/synth.hpp"
#include "habitat/taxonomy.hpp"

namespace habitat {

enum class Paradigm { PostClassification, DirectChange, Ablation, SyntheticEndToEnd };

struct SplitConfig {
    int block_size = 512;
    std::uint64_t seed = 42;
    std::array<double, 3> fractions{0.70, 0.15, 0.15};
    std::string evaluate_role = "test";  // train | val | test | all
};

struct TilingConfig {
    int patch_size = 256;
    int overlap = 64;
};

struct AblationLevel {
    std::string name;        // e.g. "RGB+NIR+nDSM"
    std::string prediction;  // path to the prediction raster for this level
};

/// Parsed run configuration (JSON, versioned schema; unknown keys are
/// errors). Paths are resolved relative to the config file's directory.
struct ExperimentConfig {
    int version = 1;
    Paradigm paradigm = Paradigm::PostClassification;
    std::map<std::string, std::string> inputs;  // semantic tag -> raster path
    std::string scheme_path;
    std::string categories_path;
    std::string rules_path;
    std::string remap_path;  // optional
    SplitConfig split;
    TilingConfig tiling;
    std::vector<AblationLevel> ablation;
    std::optional<SceneSpec> scene;   // synthetic_end_to_end
    double noise_rate = 0.2;          // synthetic_end_to_end perturbation
    UndefinedPolicy undefined_policy = UndefinedPolicy::Exclude;
    std::string output_dir = "out";

    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text,
                                           const std::string& base_dir);
};

struct RunOutputs {
    std::map<std::string, MetricReport> reports;  // keyed "binary", "multiclass", ...
    std::string output_dir;
};

/// Post-classification paradigm: the predicted transition map comes from
/// (reference_t1, predicted t2 labels) through the temporal comparison
/// module, the truth map from (reference_t1, reference_t2). Emits binary and
/// multi-class reports over the evaluate_role pixels.
RunOutputs run_post_classification(const ExperimentConfig& cfg);

/// Direct-change paradigm: evaluates an externally produced change map
/// (binary 0/1 or categorical over the transition categories) against the
/// truth transition map built from the references.
RunOutputs run_direct_change(const ExperimentConfig& cfg);

/// One evaluation row per ablation level; writes a combined ablation.csv
/// (modalities, binary change metrics, semantic segmentation metrics).
RunOutputs run_ablation(const ExperimentConfig& cfg);

/// Generates the synthetic scene, verifies the generator's truth map against
/// the temporal comparison module (OracleViolation on mismatch), checks the
/// tile round-trip, then runs both paradigms with perfect and perturbed
/// predictions.
RunOutputs run_synthetic_end_to_end(const SceneSpec& spec, const ExperimentConfig& cfg);

/// Dispatch on cfg.paradigm.
RunOutputs run(const ExperimentConfig& cfg);

/// FNV-1a 64-bit content hash, "fnv1a64:<hex>"; used in run manifests.
std::string file_hash(const std::string& path);

} // namespace habitat
