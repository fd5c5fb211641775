"""Threshold phenomena for increasing events on {1, ..., r}^n.

Exact enumeration and Monte Carlo engines for influences, pivotal
probabilities and Russo-type derivatives under parametrised product measures,
the dyadic-lift functionals behind the modified Poincare inequality, and
verifiers for the resulting threshold bounds.
"""

__version__ = "0.1.0"

from .errors import (CapacityError, DomainError, InputError, InvariantError, MonotonicityError,
                     NoCrossingError, ThresholdLabError, ValidationError)
from .events import (IncreasingEvent, MonotoneClause, check_monotone, enumerate_configs, event_eval,
                     flip_coordinate, rank, unrank)
from .exact import (PointReport, gamma_t, influence_vector, measure_of_event, pivotal_probability,
                    point_report, russo_derivative_exact)
from .families import MeasureFamily, PmfSnapshot, pmf_at, s_star_over, validate_family
from .lift import (LiftReport, delta_moment, lift_report, quantile_map, truncated_pushforward,
                   verify_fs, verify_lift_bounds, verify_modified_poincare)
from .montecarlo import Estimate, estimate_measure, estimate_pivotal, sample_config
from .threshold import (SweepResult, sweep, threshold_window, verify_all_pairs, verify_remark_bound,
                        verify_threshold_bound)

__all__ = [
    "CapacityError",
    "DomainError",
    "InputError",
    "InvariantError",
    "MonotonicityError",
    "NoCrossingError",
    "ThresholdLabError",
    "ValidationError",
    "IncreasingEvent",
    "MonotoneClause",
    "check_monotone",
    "enumerate_configs",
    "event_eval",
    "flip_coordinate",
    "rank",
    "unrank",
    "PointReport",
    "gamma_t",
    "influence_vector",
    "measure_of_event",
    "pivotal_probability",
    "point_report",
    "russo_derivative_exact",
    "MeasureFamily",
    "PmfSnapshot",
    "pmf_at",
    "s_star_over",
    "validate_family",
    "LiftReport",
    "delta_moment",
    "lift_report",
    "quantile_map",
    "truncated_pushforward",
    "verify_fs",
    "verify_lift_bounds",
    "verify_modified_poincare",
    "Estimate",
    "estimate_measure",
    "estimate_pivotal",
    "sample_config",
    "SweepResult",
    "sweep",
    "threshold_window",
    "verify_all_pairs",
    "verify_remark_bound",
    "verify_threshold_bound",
]
