"""Exact event statistics under a product measure, by full enumeration.

Every quantity reduces to contracting the event's truth table against the
per-coordinate pmf.  The low-level helpers take a table and a weight vector so
the dyadic-lift module can reuse them under its truncated pmf; the public
functions take an event, a family and ``t``.

All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InputError
from .events import IncreasingEvent, require_monotone
from .families import MeasureFamily, PmfSnapshot, pmf_at

DISJ_TOL = 1e-9
RUSSO_TOL = 1e-12


def _expect(arr: np.ndarray, w: np.ndarray) -> float:
    """``E[arr]`` with every axis independently weighted by ``w``."""
    for _ in range(arr.ndim):
        arr = np.tensordot(w, arr, axes=([0], [0]))
    return float(arr)


def _contract_front(arr: np.ndarray, w: np.ndarray, count: int) -> np.ndarray:
    for _ in range(count):
        arr = np.tensordot(w, arr, axes=([0], [0]))
    return arr


def _contract_back(arr: np.ndarray, w: np.ndarray, count: int) -> np.ndarray:
    for _ in range(count):
        arr = np.tensordot(arr, w, axes=([arr.ndim - 1], [0]))
    return arr


def all_profiles(table: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``out[j, k-1] = E[f(x | x_j = k)]`` for every coordinate at once.

    Halves of the axis set are contracted recursively, so the total work is
    a small multiple of ``r**n`` rather than ``n * r**n``.
    """
    arr = table if table.dtype == float else table.astype(float)
    out = np.empty((arr.ndim, arr.shape[0]))

    def rec(a: np.ndarray, axes: list[int]) -> None:
        if len(axes) == 1:
            out[axes[0]] = a
            return
        h = len(axes) // 2
        rec(_contract_front(a, w, h), axes[h:])
        rec(_contract_back(a, w, len(axes) - h), axes[:h])

    rec(arr, list(range(arr.ndim)))
    return out


def conditional_profile(table: np.ndarray, w: np.ndarray, j: int) -> np.ndarray:
    """``h[k-1] = E[f(x | x_j = k)]`` with the other coordinates weighted by ``w``."""
    arr = np.moveaxis(table.astype(float), j, -1)
    return np.asarray(_contract_front(arr, w, arr.ndim - 1), dtype=float)


def measure_w(table: np.ndarray, w: np.ndarray) -> float:
    return _expect(table.astype(float), w)


def influences_w(table: np.ndarray, w: np.ndarray) -> np.ndarray:
    prof = all_profiles(table, w)
    return prof[:, -1] - prof[:, 0]


def pivotal_w(table: np.ndarray, w: np.ndarray, j: int) -> float:
    """Weight of ``{x in A : f(x | x_j = 1) = 0}`` (direct; no monotonicity assumed)."""
    floor = np.take(table, [0], axis=j)
    return _expect((table & ~floor).astype(float), w)


def russo_w(table: np.ndarray, w: np.ndarray, dmu: np.ndarray) -> float:
    """``sum_j E[sum_k mu'(k) f(x | x_j = k)]``."""
    return float(np.sum(all_profiles(table, w) @ dmu))


@dataclass(frozen=True)
class ProfileStats:
    nu: float
    influences: np.ndarray
    pivotal: np.ndarray
    derivative: float


def profile_stats(table: np.ndarray, w: np.ndarray, dmu: np.ndarray) -> ProfileStats:
    # increasing events only: f(x | x_j = 1) <= f(x), so nu(A_j) = nu - E f(x | x_j = 1)
    prof = all_profiles(table, w)
    nu = float(prof[0] @ w)
    return ProfileStats(nu, prof[:, -1] - prof[:, 0], np.clip(nu - prof[:, 0], 0.0, None),
                  float(np.sum(prof @ dmu)))


def gamma_star(gamma: float) -> float:
    """``max(gamma, gamma * log(1/gamma))``, 0 at ``gamma = 0``."""
    if gamma <= 0:
        return 0.0
    return max(gamma, gamma * math.log(1.0 / gamma))


def _prepared(event: IncreasingEvent, family: MeasureFamily, t: float) -> tuple[np.ndarray, PmfSnapshot]:
    if event.r != family.r:
        raise InputError(f"event has r={event.r} but family has r={family.r}")
    snap = pmf_at(family, t)
    require_monotone(event)
    return event.float_table(), snap


def measure_of_event(event: IncreasingEvent, family: MeasureFamily, t: float) -> float:
    table, snap = _prepared(event, family, t)
    return profile_stats(table, snap.probs, snap.level_derivatives).nu


def influence_vector(event: IncreasingEvent, family: MeasureFamily, t: float) -> np.ndarray:
    """``Inf_j = E[f(x | x_j = r) - f(x | x_j = 1)]`` for each coordinate."""
    table, snap = _prepared(event, family, t)
    return profile_stats(table, snap.probs, snap.level_derivatives).influences


def pivotal_probability(event: IncreasingEvent, family: MeasureFamily, t: float, j: int) -> float:
    table, snap = _prepared(event, family, t)
    if not 0 <= j < event.n:
        raise InputError(f"coordinate {j} outside [0, {event.n})")
    return float(profile_stats(table, snap.probs, snap.level_derivatives).pivotal[j])


def gamma_t(event: IncreasingEvent, family: MeasureFamily, t: float) -> tuple[float, float]:
    """``(gamma_t, gamma_t*)`` where ``gamma_t`` is the largest pivotal probability."""
    table, snap = _prepared(event, family, t)
    g = float(profile_stats(table, snap.probs, snap.level_derivatives).pivotal.max())
    return g, gamma_star(g)


def russo_derivative_exact(event: IncreasingEvent, family: MeasureFamily, t: float) -> float:
    table, snap = _prepared(event, family, t)
    return profile_stats(table, snap.probs, snap.level_derivatives).derivative


@dataclass(frozen=True)
class PointReport:
    t: float
    nu: float
    variance: float
    influences: tuple[float, ...]
    total_influence: float
    pivotal: tuple[float, ...]
    gamma_t: float
    gamma_t_star: float
    derivative: float | None
    s_t_star: float
    russo_lower_bound: float | None
    russo_status: str
    disj_residual: float | None
    disj_status: str

    CSV_COLUMNS = ("t", "nu", "var", "I", "gamma", "gamma_star", "deriv", "russo_lb", "disj_residual")

    @property
    def passed(self) -> bool:
        return "fail" not in (self.russo_status, self.disj_status)

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["influences"] = list(self.influences)
        doc["pivotal"] = list(self.pivotal)
        return doc

    def csv_header(self) -> list[str]:
        n = len(self.influences)
        return list(self.CSV_COLUMNS) + [f"inf_{j}" for j in range(n)] + [f"piv_{j}" for j in range(n)]

    def csv_row(self) -> list:
        return [self.t, self.nu, self.variance, self.total_influence, self.gamma_t, self.gamma_t_star,
                self.derivative, self.russo_lower_bound, self.disj_residual,
                *self.influences, *self.pivotal]


def disj_check(total_influence: float, variance: float, gamma: float,
               tol: float = DISJ_TOL) -> tuple[float | None, str]:
    """Residual of ``I >= Var * log(Var / (gamma * I))``; vacuous when a log argument is 0."""
    if variance <= 0 or gamma * total_influence <= 0:
        return None, "vacuous"
    residual = total_influence - variance * math.log(variance / (gamma * total_influence))
    return residual, "pass" if residual >= -tol else "fail"


def point_report(event: IncreasingEvent, family: MeasureFamily, t: float,
                 tol: float = DISJ_TOL) -> PointReport:
    table, snap = _prepared(event, family, t)
    st = profile_stats(table, snap.probs, snap.level_derivatives)
    nu = min(max(st.nu, 0.0), 1.0)
    var = nu * (1.0 - nu)
    infl, piv, deriv = st.influences, st.pivotal, st.derivative
    total = float(infl.sum())
    gamma = float(piv.max())
    s_t = snap.s_star
    lower = s_t * total
    if total == 0 and deriv == 0:
        russo_status = "vacuous"
    else:
        russo_status = "pass" if deriv >= lower - RUSSO_TOL else "fail"
    residual, disj_status = disj_check(total, var, gamma, tol)
    return PointReport(float(t), nu, var, tuple(infl.tolist()), total, tuple(piv.tolist()), gamma,
                       gamma_star(gamma), deriv, s_t, lower, russo_status, residual, disj_status)
