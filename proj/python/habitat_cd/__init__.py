"""Habitat change-detection pipeline: python bindings over the C++ core."""

from ._core import (  # noqa: F401
    ClassScheme,
    GeoGrid,
    PatchIndex,
    SceneSpec,
    TransitionRuleSet,
    __version__,
    apply_transitions,
    area_stats,
    binarize_change,
    build_transition_map,
    curvature,
    evaluate,
    extract_patches,
    generate_t1,
    make_grid,
    mosaic_labels,
    mosaic_scores,
    ndsm,
    perturb_predictions,
    read_raster,
    resample_to,
    roughness,
    slope_aspect,
    split_roles,
    stack,
    write_raster,
)
