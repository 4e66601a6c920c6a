"""Numerical laboratory for curve shortening flow of closed curves in R^n."""

from .entropy import (EntropyResult, EntropySearchConfig, GaussianSpec, entropy,
                      euclidean_density, f_functional, grim_reaper_limit_check)
from .estimators import CurveShorteningFlow, EntropyEstimator, SingularityAnalyzer
from .exceptions import (CSFError, DegenerateEdge, DegenerateFrame,
                         InsufficientBlowupData, InsufficientSnapshots, InvalidCurve,
                         NoClosure, NotNearPlanar, PointTooFar, StepFailure,
                         WindowTooShort)
from .flow import (FlowConfig, FlowState, Trajectory, estimate_singular_time, evolve,
                   step, verify_bernstein, verify_identities)
from .geometry import (ArclengthTable, Curve, DiscreteCurve, OpenCurve, arclength,
                       frenet_frame, planarity_defect, resample,
                       total_absolute_curvature)
from .reference import ReferenceLibrary, abresch_langer, circle, grim_reaper, validate
from .singularity import (classify, continuous_rescaling, match_profile, rescale_at,
                          select_blowup_sequence, shrinker_residual)

__version__ = "0.1.0"
