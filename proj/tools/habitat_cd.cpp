// habitat-cd: command-line front end for the habitat change-detection
// pipeline. Exit codes: 0 success, 2 validation/usage error, 3 oracle
// violation (internal consistency check failed).

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "habitat/csv.hpp"
#include "habitat/metrics.hpp"
#include "habitat/raster_io.hpp"
#include "habitat/rng.hpp"
#include "habitat/runner.hpp"
#include "habitat/sampling.hpp"
#include "habitat/synth.hpp"
#include "habitat/taxonomy.hpp"
#include "habitat/terrain.hpp"
#include "habitat/version.hpp"

namespace fs = std::filesystem;
using namespace habitat;

namespace {

std::array<double, 3> parse_fractions(const std::string& text) {
    std::array<double, 3> f{0.7, 0.15, 0.15};
    std::stringstream ss(text);
    std::string part;
    int i = 0;
    while (std::getline(ss, part, ',')) {
        if (i >= 3) throw std::runtime_error("fractions need exactly 3 comma-separated values");
        f[i++] = std::stod(part);
    }
    if (i != 3) throw std::runtime_error("fractions need exactly 3 comma-separated values");
    return f;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"habitat-cd: alpine habitat change-detection raster pipeline"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    // ---- split ----
    auto* split_cmd = app.add_subcommand("split", "Spatially blocked train/val/test split");
    int sp_width = 0, sp_height = 0, sp_block = 512;
    std::uint64_t sp_seed = 42;
    std::string sp_fractions = "0.7,0.15,0.15";
    std::string sp_like, sp_out = "split.csv";
    split_cmd->add_option("--width", sp_width, "Raster width in pixels");
    split_cmd->add_option("--height", sp_height, "Raster height in pixels");
    split_cmd->add_option("--like", sp_like, "Take extent from this raster");
    split_cmd->add_option("--block-size", sp_block, "Block edge length in pixels")
        ->capture_default_str();
    split_cmd->add_option("--seed", sp_seed, "PRNG seed")->capture_default_str();
    split_cmd->add_option("--fractions", sp_fractions, "train,val,test fractions")
        ->capture_default_str();
    split_cmd->add_option("--out", sp_out, "Output CSV")->capture_default_str();

    // ---- tile ----
    auto* tile_cmd = app.add_subcommand("tile", "Extract overlapping patches");
    std::string tl_input, tl_out_dir = "tiles";
    int tl_patch = 256, tl_overlap = 64;
    tile_cmd->add_option("--input", tl_input, "Input raster")->required();
    tile_cmd->add_option("--patch-size", tl_patch, "Patch edge length")->capture_default_str();
    tile_cmd->add_option("--overlap", tl_overlap, "Patch overlap in pixels")
        ->capture_default_str();
    tile_cmd->add_option("--out-dir", tl_out_dir, "Output directory")->capture_default_str();

    // ---- mosaic ----
    auto* mosaic_cmd = app.add_subcommand("mosaic", "Merge patches back to a full map");
    std::string mo_dir, mo_out = "mosaic.tif", mo_mode = "labels";
    int mo_patch = 256, mo_overlap = 64;
    mosaic_cmd->add_option("--patches-dir", mo_dir, "Directory holding index.csv and patches")
        ->required();
    mosaic_cmd->add_option("--mode", mo_mode, "labels (majority vote) or scores (mean+argmax)")
        ->capture_default_str();
    mosaic_cmd->add_option("--patch-size", mo_patch, "Patch edge length")->capture_default_str();
    mosaic_cmd->add_option("--overlap", mo_overlap, "Patch overlap in pixels")
        ->capture_default_str();
    mosaic_cmd->add_option("--out", mo_out, "Output raster")->capture_default_str();

    // ---- terrain ----
    auto* terrain_cmd = app.add_subcommand("terrain", "LiDAR terrain derivatives");
    std::string tr_dtm, tr_dsm, tr_out_dir = "terrain";
    int tr_window = 3;
    terrain_cmd->add_option("--dtm", tr_dtm, "Digital terrain model raster")->required();
    terrain_cmd->add_option("--dsm", tr_dsm, "Digital surface model raster (enables nDSM)");
    terrain_cmd->add_option("--window", tr_window, "Roughness window (odd)")
        ->capture_default_str();
    terrain_cmd->add_option("--out-dir", tr_out_dir, "Output directory")->capture_default_str();

    // ---- remap ----
    auto* remap_cmd = app.add_subcommand("remap", "Remap label values through a CSV table");
    std::string rm_input, rm_table, rm_out = "remapped.tif", rm_default = "error";
    remap_cmd->add_option("--input", rm_input, "Categorical raster")->required();
    remap_cmd->add_option("--table", rm_table, "CSV: source_id,target_id")->required();
    remap_cmd->add_option("--default", rm_default, "error | pass | fixed:<id>")
        ->capture_default_str();
    remap_cmd->add_option("--out", rm_out, "Output raster")->capture_default_str();

    // ---- compare ----
    auto* compare_cmd =
        app.add_subcommand("compare", "Temporal comparison module: t1+t2 labels -> change map");
    std::string cp_t1, cp_t2, cp_rules, cp_categories, cp_scheme;
    std::string cp_out = "change_map.tif", cp_binary_out;
    compare_cmd->add_option("--t1", cp_t1, "Labels at time 1")->required();
    compare_cmd->add_option("--t2", cp_t2, "Labels at time 2")->required();
    compare_cmd->add_option("--scheme", cp_scheme, "Class scheme CSV")->required();
    compare_cmd->add_option("--categories", cp_categories, "Category list CSV")->required();
    compare_cmd->add_option("--rules", cp_rules, "Transition rules CSV")->required();
    compare_cmd->add_option("--out", cp_out, "Transition map output")->capture_default_str();
    compare_cmd->add_option("--binary-out", cp_binary_out, "Optional binary change output");

    // ---- metrics ----
    auto* metrics_cmd = app.add_subcommand("metrics", "Confusion matrix and evaluation report");
    std::string mt_pred, mt_ref, mt_mask, mt_scheme, mt_out_dir = "metrics";
    std::string mt_undefined = "exclude";
    metrics_cmd->add_option("--pred", mt_pred, "Prediction raster")->required();
    metrics_cmd->add_option("--ref", mt_ref, "Reference raster")->required();
    metrics_cmd->add_option("--mask", mt_mask, "Optional mask raster (nodata = excluded)");
    metrics_cmd->add_option("--scheme", mt_scheme, "Class scheme CSV")->required();
    metrics_cmd->add_option("--undefined", mt_undefined, "exclude | zero")
        ->capture_default_str();
    metrics_cmd->add_option("--out-dir", mt_out_dir, "Output directory")->capture_default_str();

    // ---- synth ----
    auto* synth_cmd = app.add_subcommand("synth", "Synthetic bi-temporal scene generator");
    std::string sy_spec, sy_rules, sy_categories, sy_out_dir = "scene";
    std::uint64_t sy_seed = 0;
    synth_cmd->add_option("--spec", sy_spec, "SceneSpec JSON")->required();
    synth_cmd->add_option("--categories", sy_categories, "Category list CSV")->required();
    synth_cmd->add_option("--rules", sy_rules, "Transition rules CSV")->required();
    synth_cmd->add_option("--seed", sy_seed, "Override the spec's seed");
    synth_cmd->add_option("--out", sy_out_dir, "Output directory")->capture_default_str();

    // ---- run ----
    auto* run_cmd = app.add_subcommand("run", "Configured experiment run");
    std::string rn_config, rn_out;
    std::uint64_t rn_seed = 0;
    run_cmd->add_option("--config", rn_config, "ExperimentConfig JSON")->required();
    run_cmd->add_option("--seed", rn_seed, "Override the split/scene seed");
    run_cmd->add_option("--out", rn_out, "Override the config's output_dir");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage problems are validation errors
    }

    if (split_cmd->parsed()) {
        if (!sp_like.empty()) {
            const GeoGrid like = read_raster(sp_like);
            sp_width = like.width;
            sp_height = like.height;
        }
        if (sp_width <= 0 || sp_height <= 0)
            throw std::runtime_error("split needs --width/--height or --like");
        const auto partition = partition_blocks(sp_width, sp_height, sp_block);
        const auto assignment = assign_split(partition, sp_seed, parse_fractions(sp_fractions));
        assignment.to_csv(sp_out);
        const auto counts = assignment.counts();
        std::cout << "blocks=" << partition.block_count() << " train=" << counts[0]
                  << " val=" << counts[1] << " test=" << counts[2] << " -> " << sp_out << "\n";
    } else if (tile_cmd->parsed()) {
        const GeoGrid grid = read_raster(tl_input);
        const PatchSet set = extract_patches(grid, tl_patch, tl_overlap);
        fs::create_directories(tl_out_dir);
        set.index.to_csv((fs::path(tl_out_dir) / "index.csv").string());
        for (std::size_t i = 0; i < set.patches.size(); ++i) {
            std::ostringstream name;
            name << "patch_" << std::setw(5) << std::setfill('0') << i << ".tif";
            write_raster(set.patches[i], (fs::path(tl_out_dir) / name.str()).string());
        }
        std::cout << set.patches.size() << " patches -> " << tl_out_dir << "\n";
    } else if (mosaic_cmd->parsed()) {
        // Raster extent is recovered from the index (origins are clamped, so
        // max origin + patch size is the full extent).
        const std::string index_path = (fs::path(mo_dir) / "index.csv").string();
        const auto rows = csv::read_file(index_path);
        int max_row = 0, max_col = 0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            max_row = std::max(max_row, std::stoi(rows[i][0]));
            max_col = std::max(max_col, std::stoi(rows[i][1]));
        }
        const PatchIndex index = PatchIndex::from_csv(index_path, mo_patch, mo_overlap,
                                                      max_col + mo_patch, max_row + mo_patch);
        std::vector<GeoGrid> patches;
        patches.reserve(index.origins.size());
        for (std::size_t i = 0; i < index.origins.size(); ++i) {
            std::ostringstream name;
            name << "patch_" << std::setw(5) << std::setfill('0') << i << ".tif";
            patches.push_back(read_raster((fs::path(mo_dir) / name.str()).string()));
        }
        const GeoGrid out = mo_mode == "scores" ? mosaic_scores(patches, index)
                                                : mosaic_labels(patches, index);
        write_raster(out, mo_out);
        std::cout << "mosaic " << out.width << "x" << out.height << " -> " << mo_out << "\n";
    } else if (terrain_cmd->parsed()) {
        const GeoGrid dtm = read_raster(tr_dtm);
        fs::create_directories(tr_out_dir);
        const auto sa = terrain::slope_aspect(dtm);
        write_raster(sa.slope, (fs::path(tr_out_dir) / "slope.tif").string());
        write_raster(sa.aspect, (fs::path(tr_out_dir) / "aspect.tif").string());
        write_raster(terrain::roughness(dtm, tr_window),
                     (fs::path(tr_out_dir) / "roughness.tif").string());
        write_raster(terrain::curvature(dtm),
                     (fs::path(tr_out_dir) / "curvature.tif").string());
        if (!tr_dsm.empty()) {
            write_raster(terrain::ndsm(read_raster(tr_dsm), dtm),
                         (fs::path(tr_out_dir) / "ndsm.tif").string());
        }
        std::cout << "terrain derivatives -> " << tr_out_dir << "\n";
    } else if (remap_cmd->parsed()) {
        RemapDefault policy = RemapDefault::Error;
        int fixed_target = 0;
        if (rm_default == "pass") policy = RemapDefault::PassThrough;
        else if (rm_default.rfind("fixed:", 0) == 0) {
            policy = RemapDefault::Fixed;
            fixed_target = std::stoi(rm_default.substr(6));
        } else if (rm_default != "error") {
            throw std::runtime_error("--default must be error, pass, or fixed:<id>");
        }
        const RemapTable table = RemapTable::from_csv(rm_table, policy, fixed_target);
        write_raster(remap_labels(read_raster(rm_input), table), rm_out);
        std::cout << "remapped -> " << rm_out << "\n";
    } else if (compare_cmd->parsed()) {
        const ClassScheme scheme = ClassScheme::from_csv(cp_scheme);
        const TransitionRuleSet rules =
            TransitionRuleSet::from_csv(cp_categories, cp_rules, scheme.size());
        const GeoGrid change =
            build_transition_map(read_raster(cp_t1), read_raster(cp_t2), rules);
        write_raster(change, cp_out);
        if (!cp_binary_out.empty()) write_raster(binarize_change(change, rules), cp_binary_out);
        std::cout << "change map -> " << cp_out << "\n";
    } else if (metrics_cmd->parsed()) {
        const ClassScheme scheme = ClassScheme::from_csv(mt_scheme);
        const GeoGrid pred = read_raster(mt_pred);
        const GeoGrid ref = read_raster(mt_ref);
        std::optional<GeoGrid> mask;
        if (!mt_mask.empty()) mask = read_raster(mt_mask);
        UndefinedPolicy policy;
        if (mt_undefined == "exclude") policy = UndefinedPolicy::Exclude;
        else if (mt_undefined == "zero") policy = UndefinedPolicy::Zero;
        else throw std::runtime_error("--undefined must be exclude or zero");

        const ConfusionMatrix c =
            accumulate(pred, ref, scheme.size(), mask ? &*mask : nullptr);
        const MetricReport rep = report(c, scheme, policy);
        fs::create_directories(mt_out_dir);
        write_report_json({{"multiclass", rep}},
                          (fs::path(mt_out_dir) / "report.json").string());
        write_report_csv({{"multiclass", rep}}, (fs::path(mt_out_dir) / "report.csv").string());
        c.to_csv((fs::path(mt_out_dir) / "confusion.csv").string());
        std::cout << "oa=" << rep.overall_accuracy << " macro_iou=" << rep.macro_iou
                  << " macro_f1=" << rep.macro_f1 << " -> " << mt_out_dir << "\n";
    } else if (synth_cmd->parsed()) {
        SceneSpec spec = SceneSpec::from_json_file(sy_spec);
        if (synth_cmd->count("--seed") > 0) spec.seed = sy_seed;
        const TransitionRuleSet rules =
            TransitionRuleSet::from_csv(sy_categories, sy_rules, spec.num_classes());
        const GeoGrid t1 = generate_t1(spec);
        const BiTemporalScene scene = apply_transitions(t1, spec, rules);
        const GeoGrid recomputed = build_transition_map(t1, scene.t2, rules);
        if (recomputed.bands[0].values != scene.truth.bands[0].values)
            throw OracleViolation("synthetic truth map disagrees with build_transition_map");
        fs::create_directories(sy_out_dir);
        write_raster(t1, (fs::path(sy_out_dir) / "t1.tif").string());
        write_raster(scene.t2, (fs::path(sy_out_dir) / "t2.tif").string());
        write_raster(scene.truth, (fs::path(sy_out_dir) / "truth.tif").string());
        std::cout << "scene " << spec.width << "x" << spec.height << " -> " << sy_out_dir << "\n";
    } else if (run_cmd->parsed()) {
        ExperimentConfig cfg = ExperimentConfig::from_json_file(rn_config);
        if (!rn_out.empty()) cfg.output_dir = rn_out;
        if (run_cmd->count("--seed") > 0) {
            cfg.split.seed = rn_seed;
            if (cfg.scene) cfg.scene->seed = rn_seed;
        }
        const RunOutputs out = run(cfg);
        for (const auto& [name, rep] : out.reports) {
            std::cout << name << ": oa=" << rep.overall_accuracy
                      << " macro_iou=" << rep.macro_iou << " macro_f1=" << rep.macro_f1 << "\n";
        }
        std::cout << "outputs -> " << out.output_dir << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const OracleViolation& e) {
        std::cerr << "oracle violation: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
