"""Dyadic lift of an event to [0, 1)^n at finite digit depth ``m``.

Coordinate ``j`` of the lift is ``u_j = sum_{i<=m} x_{i,j} / 2**i`` for fair
bits ``x_{i,j}``; digit ``i = 1`` is the most significant.  The lifted
function is ``g = f o F_t`` where the quantile map ``F_t`` sends ``u`` to level
``i`` when ``c_{i-1} <= u < c_i`` with ``c_i = mu_t({1..i})``.

At finite ``m`` each ``u_j`` takes the ``2**m`` values ``k / 2**m``, so the
level of coordinate ``j`` has the truncated law ``q`` (see
:func:`truncated_pushforward`), which differs from ``mu_t`` by at most
``2**-m`` per level.  Every inequality verified here compares quantities that
are all computed under ``q``: each check is then a statement about one exact
finite Bernoulli-product model and needs only floating-point slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .events import IncreasingEvent, check_capacity, require_monotone
from .exact import profile_stats
from .families import MeasureFamily, pmf_at

LIFT_TOL = 1e-9
DEFAULT_DIGITS = 4


def _levels(cutoffs: np.ndarray, u) -> np.ndarray:
    # number of cutoffs c_i <= u, plus one: the half-open cell convention
    return np.searchsorted(cutoffs, u, side="right") + 1


def quantile_map(family: MeasureFamily, t: float, u):
    """Level ``i`` with ``mu_t({1..i-1}) <= u < mu_t({1..i})``.

    Accepts a scalar or an array of ``u`` values in ``[0, 1)``.
    """
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0) or np.any(arr >= 1) or np.any(np.isnan(arr)):
        raise InputError("quantile_map needs u in [0, 1)")
    levels = _levels(pmf_at(family, t).cutoffs, arr)
    return int(levels) if levels.ndim == 0 else levels


def dyadic_levels(family: MeasureFamily, t: float, m: int) -> np.ndarray:
    """Level of each dyadic point ``k / 2**m``, ``k = 0..2**m - 1``."""
    if m < 1:
        raise InputError(f"digit depth m must be >= 1, got {m}")
    grid = np.arange(2**m) / 2.0**m
    return _levels(pmf_at(family, t).cutoffs, grid)


def digits_to_value(digits) -> float:
    return sum(int(d) / 2.0 ** (i + 1) for i, d in enumerate(digits))


def value_to_digits(u: float, m: int) -> tuple[int, ...]:
    k = u * 2**m
    if k != int(k) or not 0 <= k < 2**m:
        raise InputError(f"{u} is not a depth-{m} dyadic point in [0, 1)")
    k = int(k)
    return tuple((k >> (m - i)) & 1 for i in range(1, m + 1))


@dataclass(frozen=True)
class TruncatedPushforward:
    t: float
    m: int
    q: np.ndarray
    p: np.ndarray

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.q - self.p)))

    @property
    def total_variation(self) -> float:
        return 0.5 * float(np.sum(np.abs(self.q - self.p)))


def truncated_pushforward(family: MeasureFamily, t: float, m: int) -> TruncatedPushforward:
    """Law of ``F_t`` applied to a uniform draw from ``{k / 2**m}``."""
    levels = dyadic_levels(family, t, m)
    q = np.bincount(levels - 1, minlength=family.r) / 2.0**m
    return TruncatedPushforward(float(t), m, q, pmf_at(family, t).probs)


def _pair_counts(levels: np.ndarray, m: int, r: int) -> np.ndarray:
    """``counts[i-1, a-1, b-1]``: settings of the other digits with levels (a, b) at digit i = 0, 1."""
    k = np.arange(2**m)
    out = np.zeros((m, r, r), dtype=np.int64)
    for i in range(1, m + 1):
        bit = 1 << (m - i)
        lo = k[(k & bit) == 0]
        np.add.at(out[i - 1], (levels[lo] - 1, levels[lo + bit] - 1), 1)
    return out


def _difference_moments(table: np.ndarray, w: np.ndarray, j: int, p: int) -> np.ndarray:
    """``D[a-1, b-1] = E|f(x | x_j = b) - f(x | x_j = a)|**p`` over the other coordinates."""
    arr = np.moveaxis(table.astype(float), j, 0)
    r = arr.shape[0]
    out = np.empty((r, r))
    for a in range(r):
        diff = np.abs(arr - arr[a]) ** p  # rows indexed by b
        for _ in range(arr.ndim - 1):
            diff = np.tensordot(diff, w, axes=([diff.ndim - 1], [0]))
        out[a] = diff
    return out


def _lift_inputs(event: IncreasingEvent, family: MeasureFamily, t: float, m: int):
    if event.r != family.r:
        raise InputError(f"event has r={event.r} but family has r={family.r}")
    if m < 1:
        raise InputError(f"digit depth m must be >= 1, got {m}")
    check_capacity(2 ** (m - 1) * event.r ** (event.n - 1), what="lift state space")
    table = event.table()
    require_monotone(event)
    levels = dyadic_levels(family, t, m)
    q = np.bincount(levels - 1, minlength=family.r) / 2.0**m
    return table, levels, q


def _moment_grid(table, levels, q, m, p) -> np.ndarray:
    counts = _pair_counts(levels, m, table.shape[0]).astype(float)
    n = table.ndim
    out = np.empty((m, n))
    for j in range(n):
        d = _difference_moments(table, q, j, p)
        out[:, j] = np.einsum("iab,ab->i", counts, d) / 2.0 ** (m - 1) / 2.0**p
    return out


def delta_moment(event: IncreasingEvent, family: MeasureFamily, t: float, m: int,
                 i: int, j: int, p: int) -> float:
    """``E|Delta_{i,j} g_t|**p`` for the depth-``m`` lift, exactly.

    Uses ``E|Delta|**p = 2**-p * E|g(x_{i,j} = 1) - g(x_{i,j} = 0)|**p``.
    """
    if not 1 <= i <= m:
        raise InputError(f"digit index i={i} outside 1..{m}")
    if not 0 <= j < event.n:
        raise InputError(f"coordinate {j} outside [0, {event.n})")
    if p not in (1, 2):
        raise InputError(f"p must be 1 or 2, got {p}")
    table, levels, q = _lift_inputs(event, family, t, m)
    bit = 1 << (m - i)
    k = np.arange(2**m)
    lo = k[(k & bit) == 0]
    d = _difference_moments(table, q, j, p)
    return float(np.mean(d[levels[lo] - 1, levels[lo + bit] - 1])) / 2.0**p


@dataclass(frozen=True)
class Check:
    """One inequality ``lhs <= rhs``; ``residual = rhs - lhs`` must be ``>= -tol``."""

    name: str
    lhs: float
    rhs: float
    residual: float | None
    status: str

    @classmethod
    def le(cls, name: str, lhs: float, rhs: float, tol: float) -> "Check":
        res = rhs - lhs
        return cls(name, lhs, rhs, res, "pass" if res >= -tol else "fail")

    def to_json(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "residual": self.residual, "status": self.status}


@dataclass(frozen=True)
class LiftReport:
    t: float
    m: int
    q: np.ndarray
    abs_moments: np.ndarray
    sq_moments: np.ndarray
    m1: float
    m2: float
    nu: float
    variance: float
    total_influence: float
    pivotal: np.ndarray
    gamma: float

    def to_json(self) -> dict:
        return {"t": self.t, "m": self.m, "q": self.q.tolist(),
                "abs_moments": self.abs_moments.tolist(), "sq_moments": self.sq_moments.tolist(),
                "M1": self.m1, "M2": self.m2, "nu": self.nu, "variance": self.variance,
                "total_influence": self.total_influence, "pivotal": self.pivotal.tolist(),
                "gamma": self.gamma}


def lift_report(event: IncreasingEvent, family: MeasureFamily, t: float, m: int) -> LiftReport:
    """Moments of every ``Delta_{i,j}`` and the truncated-model statistics.

    ``abs_moments[i-1, j]`` is ``E|Delta_{i,j}|`` and ``sq_moments[i-1, j]`` is
    ``E(Delta_{i,j}**2)``; ``M1`` sums the squares of the former, ``M2`` sums
    the latter.
    """
    table, levels, q = _lift_inputs(event, family, t, m)
    abs_m = _moment_grid(table, levels, q, m, 1)
    sq_m = _moment_grid(table, levels, q, m, 2)
    st = profile_stats(event.float_table(), q, np.zeros(event.r))
    nu = min(max(st.nu, 0.0), 1.0)
    return LiftReport(float(t), m, q, abs_m, sq_m, float(np.sum(abs_m**2)), float(np.sum(sq_m)),
                      nu, nu * (1 - nu), float(st.influences.sum()), st.pivotal, float(st.pivotal.max()))


def fs_check(rep: LiftReport, tol: float = LIFT_TOL) -> Check:
    """``M2 >= V/2 * log(V / M1)`` on the truncated model."""
    v = rep.variance
    if v <= 0:
        return Check("falik_samorodnitsky", math.nan, math.nan, None, "vacuous")
    bound = 0.5 * v * math.log(v / rep.m1) if rep.m1 > 0 else math.inf
    res = rep.m2 - bound
    return Check("falik_samorodnitsky", bound, rep.m2, res, "pass" if res >= -tol else "fail")


def verify_fs(event: IncreasingEvent, family: MeasureFamily, t: float, m: int,
              tol: float = LIFT_TOL) -> Check:
    return fs_check(lift_report(event, family, t, m), tol)


@dataclass
class LiftBounds:
    m2_vs_influence: Check
    digit_vs_pivotal: list[Check]
    m1_vs_gamma: Check

    @property
    def checks(self) -> list[Check]:
        return [self.m2_vs_influence, *self.digit_vs_pivotal, self.m1_vs_gamma]

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def to_json(self) -> dict:
        return {"passed": self.passed, "m2_vs_influence": self.m2_vs_influence.to_json(),
                "digit_vs_pivotal": [c.to_json() for c in self.digit_vs_pivotal],
                "m1_vs_gamma": self.m1_vs_gamma.to_json()}


def lift_bounds(rep: LiftReport, tol: float = LIFT_TOL) -> LiftBounds:
    m, n = rep.abs_moments.shape
    digit = [Check.le(f"E|Delta_{i + 1},{j}| <= nu(A_{j})", float(rep.abs_moments[i, j]),
                      float(rep.pivotal[j]), tol)
             for i in range(m) for j in range(n)]
    return LiftBounds(Check.le("M2 <= I/2", rep.m2, 0.5 * rep.total_influence, tol), digit,
                      Check.le("M1 <= gamma*I", rep.m1, rep.gamma * rep.total_influence, tol))


def verify_lift_bounds(event: IncreasingEvent, family: MeasureFamily, t: float, m: int,
                       tol: float = LIFT_TOL) -> LiftBounds:
    return lift_bounds(lift_report(event, family, t, m), tol)


@dataclass
class PoincareTrend:
    """Per-depth modified Poincare checks plus the untruncated variance they approach."""

    t: float
    reports: list[LiftReport]
    checks: list[Check]
    exact_variance: float
    variance_error: list[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def to_json(self) -> dict:
        return {"t": self.t, "exact_variance": self.exact_variance, "passed": self.passed,
                "trend": [{"m": r.m, "M1": r.m1, "M2": r.m2, "variance": r.variance,
                           "variance_error": e, "check": c.to_json()}
                          for r, c, e in zip(self.reports, self.checks, self.variance_error)]}


def verify_modified_poincare(event: IncreasingEvent, family: MeasureFamily, t: float, m_max: int,
                             tol: float = LIFT_TOL) -> PoincareTrend:
    """``M2 >= V/2 * log(V / M1)`` at every depth ``m = 1..m_max``, with the sequences."""
    if m_max < 1:
        raise InputError(f"m_max must be >= 1, got {m_max}")
    reports = [lift_report(event, family, t, m) for m in range(1, m_max + 1)]
    snap = pmf_at(family, t)
    nu = profile_stats(event.float_table(), snap.probs, snap.level_derivatives).nu
    exact_var = nu * (1 - nu)
    return PoincareTrend(float(t), reports, [fs_check(r, tol) for r in reports], exact_var,
                         [abs(r.variance - exact_var) for r in reports])
