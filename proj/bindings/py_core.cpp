// _core: pybind11 bindings exposing the main pipeline operations to Python.
// Grids cross the boundary as (2-D numpy array, metadata dict) pairs per band.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "habitat/metrics.hpp"
#include "habitat/raster_io.hpp"
#include "habitat/runner.hpp"
#include "habitat/sampling.hpp"
#include "habitat/synth.hpp"
#include "habitat/taxonomy.hpp"
#include "habitat/terrain.hpp"
#include "habitat/version.hpp"

namespace py = pybind11;
using namespace habitat;

namespace {

py::array_t<double> band_to_array(const GeoGrid& grid, std::size_t band) {
    py::array_t<double> arr({grid.height, grid.width});
    std::copy(grid.bands[band].values.begin(), grid.bands[band].values.end(),
              arr.mutable_data());
    return arr;
}

void fill_band_from_array(GeoGrid& grid, Band& band, const py::array_t<double>& arr) {
    const auto buf = arr.request();
    if (buf.ndim != 2) throw std::runtime_error("band array must be 2-D");
    if (buf.shape[0] != grid.height || buf.shape[1] != grid.width)
        throw std::runtime_error("band array shape does not match grid dimensions");
    const auto view = arr.unchecked<2>();
    for (int r = 0; r < grid.height; ++r)
        for (int c = 0; c < grid.width; ++c) band.values[grid.index(r, c)] = view(r, c);
}

GeoGrid grid_from_array(const py::array_t<double>& arr, double pixel_size, double origin_x,
                        double origin_y, int epsg, bool categorical,
                        std::optional<double> nodata, const std::string& tag) {
    const auto buf = arr.request();
    if (buf.ndim != 2) throw std::runtime_error("grid array must be 2-D");
    GeoGrid grid(static_cast<int>(buf.shape[1]), static_cast<int>(buf.shape[0]), pixel_size,
                 origin_x, origin_y, epsg);
    Band& band = grid.add_band(categorical ? BandKind::Categorical : BandKind::Continuous);
    const auto [t, score] = tag_from_string(tag);
    band.tag = t;
    band.score_class = score;
    band.nodata = nodata;
    fill_band_from_array(grid, band, arr);
    return grid;
}

py::dict report_to_dict(const MetricReport& rep) {
    py::dict d;
    d["overall_accuracy"] = rep.overall_accuracy;
    d["macro_iou"] = rep.macro_iou;
    d["macro_f1"] = rep.macro_f1;
    d["macro_recall"] = rep.macro_recall;
    d["total_pixels"] = rep.total_pixels;
    py::list per_class;
    for (const PerClassMetrics& m : rep.per_class) {
        py::dict c;
        c["class_id"] = m.class_id;
        c["name"] = m.name;
        c["iou"] = m.iou ? py::object(py::float_(*m.iou)) : py::none();
        c["f1"] = m.f1 ? py::object(py::float_(*m.f1)) : py::none();
        c["precision"] = m.precision ? py::object(py::float_(*m.precision)) : py::none();
        c["recall"] = m.recall ? py::object(py::float_(*m.recall)) : py::none();
        c["support"] = m.support;
        c["class_frequency_percent"] = m.frequency_percent;
        per_class.append(c);
    }
    d["per_class"] = per_class;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Habitat change-detection pipeline (C++ core)";
    m.attr("__version__") = kVersion;

    py::class_<GeoGrid>(m, "GeoGrid")
        .def_readonly("width", &GeoGrid::width)
        .def_readonly("height", &GeoGrid::height)
        .def_readonly("pixel_size", &GeoGrid::pixel_size)
        .def_readonly("origin_x", &GeoGrid::origin_x)
        .def_readonly("origin_y", &GeoGrid::origin_y)
        .def_readonly("epsg", &GeoGrid::epsg)
        .def_property_readonly("band_count",
                               [](const GeoGrid& g) { return g.bands.size(); })
        .def("band", &band_to_array, py::arg("index") = 0,
             "Band values as a 2-D float64 array")
        .def("band_nodata",
             [](const GeoGrid& g, std::size_t i) -> std::optional<double> {
                 return g.bands.at(i).nodata;
             },
             py::arg("index") = 0)
        .def("band_kind",
             [](const GeoGrid& g, std::size_t i) {
                 return g.bands.at(i).kind == BandKind::Categorical ? "categorical"
                                                                    : "continuous";
             },
             py::arg("index") = 0)
        .def("band_tag",
             [](const GeoGrid& g, std::size_t i) {
                 return tag_to_string(g.bands.at(i).tag, g.bands.at(i).score_class);
             },
             py::arg("index") = 0);

    m.def("make_grid", &grid_from_array, py::arg("values"), py::arg("pixel_size") = 1.0,
          py::arg("origin_x") = 0.0, py::arg("origin_y") = 0.0, py::arg("epsg") = 32633,
          py::arg("categorical") = false, py::arg("nodata") = std::nullopt,
          py::arg("tag") = "NONE", "Builds a single-band grid from a 2-D array");

    m.def("read_raster", &read_raster, py::arg("path"));
    m.def("write_raster", &write_raster, py::arg("grid"), py::arg("path"));
    m.def("resample_to",
          [](const GeoGrid& g, double px, double min_x, double min_y, double max_x,
             double max_y) { return resample_to(g, px, {min_x, min_y, max_x, max_y}); },
          py::arg("grid"), py::arg("pixel_size"), py::arg("min_x"), py::arg("min_y"),
          py::arg("max_x"), py::arg("max_y"));
    m.def("stack", &stack, py::arg("grids"), py::arg("order"));

    // Terrain derivatives.
    m.def("ndsm", &terrain::ndsm, py::arg("dsm"), py::arg("dtm"));
    m.def("slope_aspect",
          [](const GeoGrid& dtm) {
              auto sa = terrain::slope_aspect(dtm);
              return py::make_tuple(sa.slope, sa.aspect);
          },
          py::arg("dtm"));
    m.def("roughness", &terrain::roughness, py::arg("dtm"), py::arg("window") = 3);
    m.def("curvature", &terrain::curvature, py::arg("dtm"));

    // Taxonomy / temporal comparison.
    py::class_<ClassScheme>(m, "ClassScheme")
        .def_static("from_csv", &ClassScheme::from_csv, py::arg("path"))
        .def_property_readonly("size", &ClassScheme::size)
        .def("name", [](const ClassScheme& s, int id) { return s.info(id).name; });
    py::class_<TransitionRuleSet>(m, "TransitionRuleSet")
        .def_static("from_csv", &TransitionRuleSet::from_csv, py::arg("categories_csv"),
                    py::arg("rules_csv"), py::arg("num_classes"))
        .def("map_pair", &TransitionRuleSet::map_pair)
        .def_property_readonly("no_change_id", &TransitionRuleSet::no_change_id)
        .def_property_readonly("fallback_id", &TransitionRuleSet::fallback_id)
        .def_property_readonly("num_categories",
                               [](const TransitionRuleSet& r) { return r.categories().size(); });
    m.def("build_transition_map", &build_transition_map, py::arg("labels_t1"),
          py::arg("labels_t2"), py::arg("rules"));
    m.def("binarize_change", &binarize_change, py::arg("transition"), py::arg("rules"));
    m.def("area_stats",
          [](const GeoGrid& grid, const ClassScheme& scheme) {
              py::list rows;
              for (const AreaStat& s : area_stats(grid, scheme)) {
                  py::dict d;
                  d["class_id"] = s.class_id;
                  d["name"] = s.name;
                  d["pixel_count"] = s.pixel_count;
                  d["area_ha"] = s.area_ha;
                  d["share_percent"] = s.share_percent;
                  rows.append(d);
              }
              return rows;
          },
          py::arg("grid"), py::arg("scheme"));

    // Sampling.
    py::class_<PatchIndex>(m, "PatchIndex")
        .def_readonly("patch_size", &PatchIndex::patch_size)
        .def_readonly("overlap", &PatchIndex::overlap)
        .def_readonly("origins", &PatchIndex::origins);
    m.def("extract_patches",
          [](const GeoGrid& grid, int patch, int overlap) {
              auto set = extract_patches(grid, patch, overlap);
              return py::make_tuple(set.index, set.patches);
          },
          py::arg("grid"), py::arg("patch_size") = 256, py::arg("overlap") = 64);
    m.def("mosaic_labels", &mosaic_labels, py::arg("patches"), py::arg("index"));
    m.def("mosaic_scores", &mosaic_scores, py::arg("patches"), py::arg("index"));
    m.def("split_roles",
          [](int width, int height, int block_size, std::uint64_t seed,
             const std::array<double, 3>& fractions) {
              const auto assignment =
                  assign_split(partition_blocks(width, height, block_size), seed, fractions);
              py::list rows;
              for (int br = 0; br < assignment.partition.blocks_y; ++br)
                  for (int bc = 0; bc < assignment.partition.blocks_x; ++bc)
                      rows.append(py::make_tuple(br, bc,
                                                 role_to_string(assignment.role_of(br, bc))));
              return rows;
          },
          py::arg("width"), py::arg("height"), py::arg("block_size") = 512,
          py::arg("seed") = 42,
          py::arg("fractions") = std::array<double, 3>{0.7, 0.15, 0.15});

    // Metrics.
    m.def("evaluate",
          [](const GeoGrid& pred, const GeoGrid& ref, int num_classes) {
              const ConfusionMatrix c = accumulate(pred, ref, num_classes, nullptr);
              std::vector<ClassInfo> infos;
              for (int k = 0; k < num_classes; ++k)
                  infos.push_back({k, "class " + std::to_string(k), {}});
              return report_to_dict(report(c, ClassScheme(std::move(infos))));
          },
          py::arg("pred"), py::arg("ref"), py::arg("num_classes"),
          "Confusion-matrix metrics between two categorical grids");

    // Synthetic scenes.
    py::class_<SceneSpec>(m, "SceneSpec")
        .def_static("from_json_file", &SceneSpec::from_json_file, py::arg("path"))
        .def_static("from_json_text", &SceneSpec::from_json_text, py::arg("text"))
        .def_readonly("width", &SceneSpec::width)
        .def_readonly("height", &SceneSpec::height)
        .def_readonly("seed", &SceneSpec::seed)
        .def_property_readonly("num_classes", &SceneSpec::num_classes);
    m.def("generate_t1", &generate_t1, py::arg("spec"));
    m.def("apply_transitions",
          [](const GeoGrid& t1, const SceneSpec& spec, const TransitionRuleSet& rules) {
              auto scene = apply_transitions(t1, spec, rules);
              return py::make_tuple(scene.t2, scene.truth);
          },
          py::arg("t1"), py::arg("spec"), py::arg("rules"));
    m.def("perturb_predictions", &perturb_predictions, py::arg("labels"),
          py::arg("noise_rate"), py::arg("seed"), py::arg("num_classes") = 0);
}
