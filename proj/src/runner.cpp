#include "habitat/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "habitat/csv.hpp"
#include "habitat/raster_io.hpp"
#include "habitat/version.hpp"

namespace fs = std::filesystem;

namespace habitat {

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
    if (path.empty() || fs::path(path).is_absolute() || base_dir.empty()) return path;
    return (fs::path(base_dir) / path).string();
}

Paradigm paradigm_from_string(const std::string& text) {
    if (text == "post_classification") return Paradigm::PostClassification;
    if (text == "direct_change") return Paradigm::DirectChange;
    if (text == "ablation") return Paradigm::Ablation;
    if (text == "synthetic_end_to_end") return Paradigm::SyntheticEndToEnd;
    throw std::runtime_error("unknown paradigm: " + text);
}

void reject_unknown_keys(const nlohmann::json& j, const std::vector<std::string>& known,
                         const std::string& context) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw std::runtime_error("unknown config key '" + it.key() + "' in " + context);
    }
}

} // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text,
                                                  const std::string& base_dir) {
    nlohmann::json j = nlohmann::json::parse(text);
    reject_unknown_keys(j, {"version", "paradigm", "inputs", "scheme", "categories", "rules",
                            "remap", "split", "tiling", "ablation", "scene", "scene_spec",
                            "noise_rate", "undefined_policy", "output_dir"},
                        "config");

    ExperimentConfig cfg;
    cfg.version = j.at("version").get<int>();
    if (cfg.version != kConfigSchemaVersion)
        throw std::runtime_error("unsupported config schema version " +
                                 std::to_string(cfg.version));
    cfg.paradigm = paradigm_from_string(j.at("paradigm").get<std::string>());

    if (j.contains("inputs")) {
        for (auto it = j["inputs"].begin(); it != j["inputs"].end(); ++it)
            cfg.inputs[it.key()] = resolve(base_dir, it.value().get<std::string>());
    }
    if (j.contains("scheme")) cfg.scheme_path = resolve(base_dir, j["scheme"].get<std::string>());
    if (j.contains("categories"))
        cfg.categories_path = resolve(base_dir, j["categories"].get<std::string>());
    if (j.contains("rules")) cfg.rules_path = resolve(base_dir, j["rules"].get<std::string>());
    if (j.contains("remap")) cfg.remap_path = resolve(base_dir, j["remap"].get<std::string>());

    if (j.contains("split")) {
        const auto& s = j["split"];
        reject_unknown_keys(s, {"block_size", "seed", "fractions", "evaluate_role"}, "split");
        if (s.contains("block_size")) cfg.split.block_size = s["block_size"].get<int>();
        if (s.contains("seed")) cfg.split.seed = s["seed"].get<std::uint64_t>();
        if (s.contains("fractions")) {
            const auto f = s["fractions"].get<std::vector<double>>();
            if (f.size() != 3) throw std::runtime_error("split.fractions must have 3 entries");
            cfg.split.fractions = {f[0], f[1], f[2]};
        }
        if (s.contains("evaluate_role")) {
            cfg.split.evaluate_role = s["evaluate_role"].get<std::string>();
            if (cfg.split.evaluate_role != "all")
                role_from_string(cfg.split.evaluate_role);  // validates
        }
    }
    if (j.contains("tiling")) {
        const auto& t = j["tiling"];
        reject_unknown_keys(t, {"patch_size", "overlap"}, "tiling");
        if (t.contains("patch_size")) cfg.tiling.patch_size = t["patch_size"].get<int>();
        if (t.contains("overlap")) cfg.tiling.overlap = t["overlap"].get<int>();
    }
    if (j.contains("ablation")) {
        for (const auto& level : j["ablation"]) {
            reject_unknown_keys(level, {"name", "prediction"}, "ablation level");
            cfg.ablation.push_back({level.at("name").get<std::string>(),
                                    resolve(base_dir, level.at("prediction").get<std::string>())});
        }
    }
    if (j.contains("scene") && j.contains("scene_spec"))
        throw std::runtime_error("config: give either inline 'scene' or 'scene_spec' path");
    if (j.contains("scene")) cfg.scene = SceneSpec::from_json_text(j["scene"].dump());
    if (j.contains("scene_spec"))
        cfg.scene = SceneSpec::from_json_file(resolve(base_dir, j["scene_spec"].get<std::string>()));
    if (j.contains("noise_rate")) cfg.noise_rate = j["noise_rate"].get<double>();
    if (j.contains("undefined_policy")) {
        const std::string p = j["undefined_policy"].get<std::string>();
        if (p == "exclude") cfg.undefined_policy = UndefinedPolicy::Exclude;
        else if (p == "zero") cfg.undefined_policy = UndefinedPolicy::Zero;
        else throw std::runtime_error("unknown undefined_policy: " + p);
    }
    // Input paths are config-relative; the output directory is left as given
    // (resolved against the working directory).
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text, fs::path(path).parent_path().string());
}

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash missing file: " + path);
    std::uint64_t h = 14695981039346656037ull;  // FNV-1a offset basis
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    std::ostringstream os;
    os << "fnv1a64:" << std::hex << h;
    return os.str();
}

namespace {

const std::string& require_input(const ExperimentConfig& cfg, const std::string& key) {
    auto it = cfg.inputs.find(key);
    if (it == cfg.inputs.end())
        throw std::runtime_error("config missing required input '" + key + "'");
    if (!fs::exists(it->second))
        throw std::runtime_error("input '" + key + "' does not exist: " + it->second);
    return it->second;
}

TransitionRuleSet load_rules(const ExperimentConfig& cfg, int num_classes) {
    if (cfg.categories_path.empty() || cfg.rules_path.empty())
        throw std::runtime_error("config missing 'categories'/'rules' CSV paths");
    return TransitionRuleSet::from_csv(cfg.categories_path, cfg.rules_path, num_classes);
}

/// Collapses a score raster (multi-band or continuous) to hard labels via
/// per-pixel argmax; categorical single-band rasters pass through.
GeoGrid to_labels(const GeoGrid& grid) {
    if (grid.bands.size() == 1 && grid.bands[0].kind == BandKind::Categorical) return grid;
    GeoGrid out(grid.width, grid.height, grid.pixel_size, grid.origin_x, grid.origin_y, grid.epsg);
    Band& band = out.add_band(BandKind::Categorical, Tag::Label, kLabelNoData);
    band.nodata = kLabelNoData;
    for (std::size_t i = 0; i < band.values.size(); ++i) {
        int best = -1;
        double best_score = 0;
        for (std::size_t b = 0; b < grid.bands.size(); ++b) {
            const double v = grid.bands[b].values[i];
            if (grid.bands[b].is_nodata(v)) { best = -1; break; }
            if (best < 0 || v > best_score) {
                best = static_cast<int>(b);
                best_score = v;
            }
        }
        if (best >= 0) band.values[i] = best;
    }
    return out;
}

/// Role mask over the grid extent (1 = evaluate, nodata = skip), or nullopt
/// when evaluate_role is "all".
std::optional<GeoGrid> build_role_mask(const ExperimentConfig& cfg, const GeoGrid& like) {
    if (cfg.split.evaluate_role == "all") return std::nullopt;
    const BlockPartition partition =
        partition_blocks(like.width, like.height, cfg.split.block_size);
    const SplitAssignment assignment =
        assign_split(partition, cfg.split.seed, cfg.split.fractions);
    GeoGrid ones = make_grid(like.width, like.height, like.pixel_size, BandKind::Categorical, 1.0);
    ones.origin_x = like.origin_x;
    ones.origin_y = like.origin_y;
    ones.epsg = like.epsg;
    return mask_by_split(ones, assignment, role_from_string(cfg.split.evaluate_role));
}

struct ManifestBuilder {
    nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
    void add(const std::string& key, const std::string& path) {
        nlohmann::ordered_json entry;
        entry["path"] = path;
        entry["hash"] = file_hash(path);
        inputs[key] = entry;
    }
};

void write_manifest(const ExperimentConfig& cfg, const ManifestBuilder& mb,
                    const std::vector<std::string>& outputs) {
    nlohmann::ordered_json j;
    j["tool"] = "habitat-cd";
    j["version"] = kVersion;
    j["config_schema_version"] = cfg.version;
    j["paradigm"] = cfg.paradigm == Paradigm::PostClassification ? "post_classification"
                    : cfg.paradigm == Paradigm::DirectChange     ? "direct_change"
                    : cfg.paradigm == Paradigm::Ablation         ? "ablation"
                                                                 : "synthetic_end_to_end";
    j["split"] = {{"block_size", cfg.split.block_size},
                  {"seed", cfg.split.seed},
                  {"fractions", cfg.split.fractions},
                  {"evaluate_role", cfg.split.evaluate_role}};
    j["tiling"] = {{"patch_size", cfg.tiling.patch_size}, {"overlap", cfg.tiling.overlap}};
    if (cfg.scene) j["scene_seed"] = cfg.scene->seed;
    j["inputs"] = mb.inputs;
    nlohmann::ordered_json outs = nlohmann::ordered_json::object();
    for (const std::string& path : outputs) {
        if (fs::exists(path)) outs[fs::path(path).filename().string()] = file_hash(path);
    }
    j["outputs"] = outs;

    std::ofstream out(fs::path(cfg.output_dir) / "run_manifest.json");
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write run manifest");
}

struct EvalResult {
    MetricReport multiclass;
    MetricReport binary;
    ConfusionMatrix multiclass_matrix;
    ConfusionMatrix binary_matrix;
};

EvalResult evaluate_change_maps(const GeoGrid& predicted, const GeoGrid& truth,
                                const TransitionRuleSet& rules, const GeoGrid* mask,
                                UndefinedPolicy policy) {
    EvalResult r;
    r.multiclass_matrix =
        accumulate(predicted, truth, rules.categories().size(), mask);
    r.multiclass = report(r.multiclass_matrix, rules.categories(), policy);
    const GeoGrid pred_bin = binarize_change(predicted, rules);
    const GeoGrid truth_bin = binarize_change(truth, rules);
    r.binary_matrix = accumulate(pred_bin, truth_bin, 2, mask);
    r.binary = report(r.binary_matrix, binary_scheme(), policy);
    return r;
}

void emit_reports(const EvalResult& eval, const std::string& dir) {
    fs::create_directories(dir);
    const std::vector<std::pair<std::string, MetricReport>> sections{
        {"multiclass", eval.multiclass}, {"binary", eval.binary}};
    write_report_json(sections, (fs::path(dir) / "report.json").string());
    write_report_csv(sections, (fs::path(dir) / "report.csv").string());
    eval.multiclass_matrix.to_csv((fs::path(dir) / "confusion.csv").string());
    eval.binary_matrix.to_csv((fs::path(dir) / "binary_confusion.csv").string());
}

} // namespace

RunOutputs run_post_classification(const ExperimentConfig& cfg) {
    if (cfg.scheme_path.empty()) throw std::runtime_error("config missing 'scheme' CSV path");
    const ClassScheme scheme = ClassScheme::from_csv(cfg.scheme_path);
    const TransitionRuleSet rules = load_rules(cfg, scheme.size());

    ManifestBuilder mb;
    const std::string& ref_t1_path = require_input(cfg, "reference_t1");
    const std::string& ref_t2_path = require_input(cfg, "reference_t2");
    const std::string& pred_t2_path = require_input(cfg, "predictions_t2");
    mb.add("reference_t1", ref_t1_path);
    mb.add("reference_t2", ref_t2_path);
    mb.add("predictions_t2", pred_t2_path);

    const GeoGrid ref_t1 = read_raster(ref_t1_path);
    const GeoGrid ref_t2 = read_raster(ref_t2_path);
    const GeoGrid pred_t2 = to_labels(read_raster(pred_t2_path));

    // Temporal comparison module on (reference t1, predicted t2); truth from
    // the two reference epochs.
    const GeoGrid predicted_change = build_transition_map(ref_t1, pred_t2, rules);
    const GeoGrid truth_change = build_transition_map(ref_t1, ref_t2, rules);

    const auto mask = build_role_mask(cfg, ref_t1);
    const EvalResult eval = evaluate_change_maps(predicted_change, truth_change, rules,
                                                 mask ? &*mask : nullptr, cfg.undefined_policy);

    fs::create_directories(cfg.output_dir);
    const std::string change_path = (fs::path(cfg.output_dir) / "change_map.tif").string();
    write_raster(predicted_change, change_path);
    emit_reports(eval, cfg.output_dir);
    write_manifest(cfg, mb,
                   {change_path, (fs::path(cfg.output_dir) / "report.json").string(),
                    (fs::path(cfg.output_dir) / "report.csv").string(),
                    (fs::path(cfg.output_dir) / "confusion.csv").string()});

    RunOutputs out;
    out.output_dir = cfg.output_dir;
    out.reports["multiclass"] = eval.multiclass;
    out.reports["binary"] = eval.binary;
    return out;
}

RunOutputs run_direct_change(const ExperimentConfig& cfg) {
    if (cfg.scheme_path.empty()) throw std::runtime_error("config missing 'scheme' CSV path");
    const ClassScheme scheme = ClassScheme::from_csv(cfg.scheme_path);
    const TransitionRuleSet rules = load_rules(cfg, scheme.size());

    ManifestBuilder mb;
    const std::string& change_path_in = require_input(cfg, "change_map");
    const std::string& ref_t1_path = require_input(cfg, "reference_t1");
    const std::string& ref_t2_path = require_input(cfg, "reference_t2");
    mb.add("change_map", change_path_in);
    mb.add("reference_t1", ref_t1_path);
    mb.add("reference_t2", ref_t2_path);

    GeoGrid change_map = read_raster(change_path_in);
    if (change_map.bands.size() != 1 || change_map.bands[0].kind != BandKind::Categorical)
        throw std::runtime_error("change map must be a single categorical band");
    const GeoGrid truth_change =
        build_transition_map(read_raster(ref_t1_path), read_raster(ref_t2_path), rules);
    const auto mask = build_role_mask(cfg, truth_change);
    const GeoGrid* mask_ptr = mask ? &*mask : nullptr;

    // A map containing only {0,1} is a binary change map; anything else must
    // be categorical over the transition categories.
    const Band& cb = change_map.bands[0];
    bool binary_only = true;
    for (double v : cb.values) {
        if (cb.is_nodata(v)) continue;
        if (v != 0.0 && v != 1.0) { binary_only = false; break; }
    }
    const int num_categories = rules.categories().size();
    for (double v : cb.values) {
        if (cb.is_nodata(v)) continue;
        if (static_cast<int>(v) < 0 || static_cast<int>(v) >= num_categories)
            throw std::runtime_error("change map category " +
                                     std::to_string(static_cast<int>(v)) +
                                     " outside the transition category set");
    }

    fs::create_directories(cfg.output_dir);
    RunOutputs out;
    out.output_dir = cfg.output_dir;

    std::vector<std::pair<std::string, MetricReport>> sections;
    if (binary_only) {
        const GeoGrid truth_bin = binarize_change(truth_change, rules);
        const ConfusionMatrix binary_matrix = accumulate(change_map, truth_bin, 2, mask_ptr);
        const MetricReport rep = report(binary_matrix, binary_scheme(), cfg.undefined_policy);
        sections.emplace_back("binary", rep);
        out.reports["binary"] = rep;
        binary_matrix.to_csv((fs::path(cfg.output_dir) / "confusion.csv").string());
    } else {
        const EvalResult eval = evaluate_change_maps(change_map, truth_change, rules, mask_ptr,
                                                     cfg.undefined_policy);
        sections.emplace_back("multiclass", eval.multiclass);
        sections.emplace_back("binary", eval.binary);
        out.reports["multiclass"] = eval.multiclass;
        out.reports["binary"] = eval.binary;
        eval.multiclass_matrix.to_csv((fs::path(cfg.output_dir) / "confusion.csv").string());
        eval.binary_matrix.to_csv((fs::path(cfg.output_dir) / "binary_confusion.csv").string());
    }
    write_report_json(sections, (fs::path(cfg.output_dir) / "report.json").string());
    write_report_csv(sections, (fs::path(cfg.output_dir) / "report.csv").string());
    const std::string change_out = (fs::path(cfg.output_dir) / "change_map.tif").string();
    write_raster(change_map, change_out);
    write_manifest(cfg, mb,
                   {change_out, (fs::path(cfg.output_dir) / "report.json").string(),
                    (fs::path(cfg.output_dir) / "report.csv").string(),
                    (fs::path(cfg.output_dir) / "confusion.csv").string()});
    return out;
}

RunOutputs run_ablation(const ExperimentConfig& cfg) {
    if (cfg.ablation.empty()) throw std::runtime_error("ablation requires >=1 level");
    if (cfg.scheme_path.empty()) throw std::runtime_error("config missing 'scheme' CSV path");
    const ClassScheme scheme = ClassScheme::from_csv(cfg.scheme_path);
    const TransitionRuleSet rules = load_rules(cfg, scheme.size());

    ManifestBuilder mb;
    const std::string& ref_t1_path = require_input(cfg, "reference_t1");
    const std::string& ref_t2_path = require_input(cfg, "reference_t2");
    mb.add("reference_t1", ref_t1_path);
    mb.add("reference_t2", ref_t2_path);
    const GeoGrid ref_t1 = read_raster(ref_t1_path);
    const GeoGrid ref_t2 = read_raster(ref_t2_path);
    const GeoGrid truth_change = build_transition_map(ref_t1, ref_t2, rules);
    const auto mask = build_role_mask(cfg, ref_t1);
    const GeoGrid* mask_ptr = mask ? &*mask : nullptr;

    fs::create_directories(cfg.output_dir);
    RunOutputs out;
    out.output_dir = cfg.output_dir;

    std::vector<csv::Row> table{{"modalities", "change_oa", "change_macro_iou", "change_macro_f1",
                                 "seg_oa", "seg_macro_iou", "seg_macro_f1"}};
    std::vector<std::pair<std::string, MetricReport>> sections;
    for (const AblationLevel& level : cfg.ablation) {
        if (!fs::exists(level.prediction))
            throw std::runtime_error("ablation level '" + level.name +
                                     "' prediction missing: " + level.prediction);
        mb.add("ablation:" + level.name, level.prediction);
        const GeoGrid pred_t2 = to_labels(read_raster(level.prediction));

        // Semantic segmentation metrics against the t2 reference.
        const ConfusionMatrix seg = accumulate(pred_t2, ref_t2, scheme.size(), mask_ptr);
        const MetricReport seg_rep = report(seg, scheme, cfg.undefined_policy);
        // Binary change metrics through the temporal comparison module.
        const GeoGrid predicted_change = build_transition_map(ref_t1, pred_t2, rules);
        const GeoGrid pred_bin = binarize_change(predicted_change, rules);
        const GeoGrid truth_bin = binarize_change(truth_change, rules);
        const ConfusionMatrix chg = accumulate(pred_bin, truth_bin, 2, mask_ptr);
        const MetricReport chg_rep = report(chg, binary_scheme(), cfg.undefined_policy);

        auto fmt = [](double v) {
            std::ostringstream os;
            os.precision(6);
            os << std::fixed << v;
            return os.str();
        };
        table.push_back({level.name, fmt(chg_rep.overall_accuracy), fmt(chg_rep.macro_iou),
                         fmt(chg_rep.macro_f1), fmt(seg_rep.overall_accuracy),
                         fmt(seg_rep.macro_iou), fmt(seg_rep.macro_f1)});
        sections.emplace_back(level.name + ":change", chg_rep);
        sections.emplace_back(level.name + ":segmentation", seg_rep);
        out.reports[level.name + ":change"] = chg_rep;
        out.reports[level.name + ":segmentation"] = seg_rep;
    }
    csv::write_file((fs::path(cfg.output_dir) / "ablation.csv").string(), table);
    write_report_json(sections, (fs::path(cfg.output_dir) / "report.json").string());
    write_report_csv(sections, (fs::path(cfg.output_dir) / "report.csv").string());
    write_manifest(cfg, mb, {(fs::path(cfg.output_dir) / "ablation.csv").string(),
                             (fs::path(cfg.output_dir) / "report.json").string()});
    return out;
}

RunOutputs run_synthetic_end_to_end(const SceneSpec& spec, const ExperimentConfig& cfg) {
    spec.validate();
    const TransitionRuleSet rules = load_rules(cfg, spec.num_classes());

    const GeoGrid t1 = generate_t1(spec);
    const BiTemporalScene scene = apply_transitions(t1, spec, rules);

    // Central cross-module oracle: the generator's truth map must equal the
    // temporal comparison module bit-exactly.
    const GeoGrid recomputed = build_transition_map(t1, scene.t2, rules);
    if (recomputed.bands[0].values != scene.truth.bands[0].values)
        throw OracleViolation("synthetic truth map disagrees with build_transition_map");

    // Tiling round-trip must be lossless when the scene is large enough.
    if (spec.width >= cfg.tiling.patch_size && spec.height >= cfg.tiling.patch_size) {
        const PatchSet tiles =
            extract_patches(scene.t2, cfg.tiling.patch_size, cfg.tiling.overlap);
        const GeoGrid mosaic = mosaic_labels(tiles.patches, tiles.index);
        if (mosaic.bands[0].values != scene.t2.bands[0].values)
            throw OracleViolation("patch extract/mosaic round-trip altered the label map");
    }

    fs::create_directories(cfg.output_dir);
    const std::string t1_path = (fs::path(cfg.output_dir) / "t1.tif").string();
    const std::string t2_path = (fs::path(cfg.output_dir) / "t2.tif").string();
    const std::string truth_path = (fs::path(cfg.output_dir) / "truth.tif").string();
    write_raster(t1, t1_path);
    write_raster(scene.t2, t2_path);
    write_raster(scene.truth, truth_path);

    const auto mask = build_role_mask(cfg, t1);
    const GeoGrid* mask_ptr = mask ? &*mask : nullptr;

    RunOutputs out;
    out.output_dir = cfg.output_dir;

    // Post-classification paradigm, perfect then perturbed predictions.
    {
        const EvalResult perfect = evaluate_change_maps(
            build_transition_map(t1, scene.t2, rules), scene.truth, rules, mask_ptr,
            cfg.undefined_policy);
        emit_reports(perfect, (fs::path(cfg.output_dir) / "post_classification").string());
        out.reports["post_classification:multiclass"] = perfect.multiclass;
        out.reports["post_classification:binary"] = perfect.binary;

        const GeoGrid noisy_t2 =
            perturb_predictions(scene.t2, cfg.noise_rate, spec.seed + 1, spec.num_classes());
        const EvalResult noisy = evaluate_change_maps(build_transition_map(t1, noisy_t2, rules),
                                                      scene.truth, rules, mask_ptr,
                                                      cfg.undefined_policy);
        emit_reports(noisy,
                     (fs::path(cfg.output_dir) / "post_classification_noisy").string());
        out.reports["post_classification_noisy:multiclass"] = noisy.multiclass;
        out.reports["post_classification_noisy:binary"] = noisy.binary;
    }

    // Direct-change paradigm: the provided change map is the truth itself
    // (perfect) and a perturbed copy.
    {
        const EvalResult perfect =
            evaluate_change_maps(scene.truth, scene.truth, rules, mask_ptr, cfg.undefined_policy);
        emit_reports(perfect, (fs::path(cfg.output_dir) / "direct_change").string());
        out.reports["direct_change:multiclass"] = perfect.multiclass;
        out.reports["direct_change:binary"] = perfect.binary;

        const GeoGrid noisy_map = perturb_predictions(scene.truth, cfg.noise_rate, spec.seed + 2,
                                                      rules.categories().size());
        const EvalResult noisy =
            evaluate_change_maps(noisy_map, scene.truth, rules, mask_ptr, cfg.undefined_policy);
        emit_reports(noisy, (fs::path(cfg.output_dir) / "direct_change_noisy").string());
        out.reports["direct_change_noisy:multiclass"] = noisy.multiclass;
        out.reports["direct_change_noisy:binary"] = noisy.binary;
    }

    // Top-level copies of the headline (perfect post-classification) reports
    // so every run directory exposes the same file contract.
    const EvalResult headline = evaluate_change_maps(
        build_transition_map(t1, scene.t2, rules), scene.truth, rules, mask_ptr,
        cfg.undefined_policy);
    emit_reports(headline, cfg.output_dir);

    ManifestBuilder mb;
    mb.add("t1", t1_path);
    mb.add("t2", t2_path);
    mb.add("truth", truth_path);
    write_manifest(cfg, mb,
                   {(fs::path(cfg.output_dir) / "report.json").string(),
                    (fs::path(cfg.output_dir) / "report.csv").string(),
                    (fs::path(cfg.output_dir) / "confusion.csv").string()});
    return out;
}

RunOutputs run(const ExperimentConfig& cfg) {
    switch (cfg.paradigm) {
        case Paradigm::PostClassification: return run_post_classification(cfg);
        case Paradigm::DirectChange: return run_direct_change(cfg);
        case Paradigm::Ablation: return run_ablation(cfg);
        case Paradigm::SyntheticEndToEnd:
            if (!cfg.scene) throw std::runtime_error("synthetic run needs a 'scene' spec");
            return run_synthetic_end_to_end(*cfg.scene, cfg);
    }
    throw std::runtime_error("unknown paradigm");
}

} // namespace habitat
