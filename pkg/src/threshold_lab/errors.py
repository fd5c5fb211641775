"""Exception hierarchy shared by every engine.

The CLI maps :class:`ThresholdLabError` subclasses to exit status 1; a failed
inequality check is reported through the result objects, never raised.
"""

import os
import traceback

COMPONENTS = {"events": "product_space", "families": "measure_family", "exact": "exact_engine",
              "lift": "dyadic_lift", "montecarlo": "monte_carlo", "threshold": "threshold_analysis",
              "cli": "cli_runner"}
_PACKAGE_DIR = os.path.dirname(os.path.abspath(__file__))


def origin(exc: BaseException) -> str:
    """Component whose code raised ``exc``: the innermost package frame in its traceback."""
    found = getattr(exc, "module", "threshold_lab")
    for frame in traceback.extract_tb(exc.__traceback__):
        path = os.path.abspath(frame.filename)
        if os.path.dirname(path) == _PACKAGE_DIR:
            found = COMPONENTS.get(os.path.splitext(os.path.basename(path))[0], found)
    return found


class ThresholdLabError(Exception):
    """Base class for all operational errors raised by this package."""

    module = "threshold_lab"


class InputError(ThresholdLabError, ValueError):
    """Malformed argument: wrong dimension, level out of range, bad schema."""


class DomainError(ThresholdLabError, ValueError):
    """Parameter outside the open interval on which a family is defined."""

    module = "measure_family"


class ValidationError(ThresholdLabError, ValueError):
    """A measure family produced an invalid pmf."""

    module = "measure_family"


class CapacityError(ThresholdLabError):
    """Exhaustive enumeration would exceed the configured cap.

    Use the Monte Carlo estimators instead, or raise ``THRESHOLD_LAB_CAP``.
    """


class MonotonicityError(ThresholdLabError):
    """The event is not coordinate-wise increasing."""

    module = "product_space"


class InvariantError(ThresholdLabError):
    """An internal invariant failed (non-monotone curve, broken coupling)."""


class NoCrossingError(ThresholdLabError, ValueError):
    """The probability curve does not span [eps, 1 - eps] on the grid."""

    module = "threshold_analysis"
