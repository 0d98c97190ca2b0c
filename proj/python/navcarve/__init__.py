"""Convex free-space regions grown from sparse point clouds."""

from ._navcarve import (
    NavcarveError,
    __version__,
    chebyshev_center,
    convex_hull,
    default_config,
    generate_environment,
    grow_region,
    inscribed_ellipsoid,
    polytope_hull,
    read_mesh,
    read_point_cloud,
    run_pipeline,
    run_stage,
    sample_seeds,
    statistical_outlier_mask,
    triangulate_facet,
    verify_manifest,
    write_synthetic,
)

__all__ = [
    "NavcarveError",
    "__version__",
    "chebyshev_center",
    "convex_hull",
    "default_config",
    "generate_environment",
    "grow_region",
    "inscribed_ellipsoid",
    "polytope_hull",
    "read_mesh",
    "read_point_cloud",
    "run_pipeline",
    "run_stage",
    "sample_seeds",
    "statistical_outlier_mask",
    "triangulate_facet",
    "verify_manifest",
    "write_synthetic",
]
