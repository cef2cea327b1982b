"""Numerical verification of intrinsic/extrinsic area-density identities
on discretized minimal surfaces."""

__version__ = "0.1.0"

from .catalog import (AnalyticConeEntry, ImmersionChart, chart_labels,
                      cone_density, evaluate, get_chart, mean_curvature,
                      pullback_metric, scaled, CONES)
from .density import (DensityProfile, LimitEstimate, ball_sandwich_check,
                      density_profile, extrinsic_density, guard_radius,
                      intrinsic_density, limit_equality_check, limit_estimate,
                      unit_ball_volume)
from .findings import Finding
from .geodesic import (DistanceField, GradientField, cross_validate,
                       distance_field, gradient_field)
from .meshing import (MetricMesh, edge_length, export_mesh, import_mesh,
                      refine, triangulate)
from .monotonicity import (AnnulusIntegral, ChordArcCertificate,
                           ResidualReport, annulus_error_integral,
                           chord_arc_check, chord_arc_threshold,
                           laplacian_defect, lower_bound_check,
                           mean_curvature_term, monotonicity_residual)
