"""Parametrised families t -> mu_t of probability measures on {1, ..., r}.

A family is described by its tails ``G_k(t) = mu_t({k, ..., r})`` for
``k = 2..r`` (``G_1 = 1``) and their t-derivatives ``S_{t,k}``.  All arrays
returned here have length ``r`` and are indexed by ``k - 1``, so ``tails[0]``
is ``G_1 = 1`` and ``derivs[0]`` is ``S_{t,1} = 0``.

Three kinds are built in:

``embedded``
    ``G_k(t) = t`` for every ``k >= 2`` on (0, 1).  Mass sits on levels 1 and
    r only, which makes {1, ..., r} behave like {0, 1} under Bernoulli(t).
``power``
    ``G_k(t) = t ** alpha_k`` on (0, 1) with ``alpha_2 <= ... <= alpha_r``.
``tabulated``
    User-supplied tails on a t grid, interpolated by monotone cubic (PCHIP)
    splines; derivatives by central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, InputError, ValidationError

DEFAULT_FD_STEP = 1e-4
DEFAULT_GRID_POINTS = 101
PMF_TOL = 1e-12


@dataclass(frozen=True)
class PmfSnapshot:
    """Everything about ``mu_t`` at one parameter value.

    ``derivative_error`` is the Richardson estimate ``|D(h) - D(h/2)|`` when
    derivatives come from finite differences, else 0.
    """

    t: float
    probs: np.ndarray
    tails: np.ndarray
    derivs: np.ndarray
    derivative_method: str = "analytic"
    derivative_error: float = 0.0

    @property
    def level_derivatives(self) -> np.ndarray:
        """``mu_t'(k) = S_{t,k} - S_{t,k+1}`` with ``S_{t,r+1} = 0``."""
        return self.derivs - np.append(self.derivs[1:], 0.0)

    @property
    def s_star(self) -> float:
        """``min_{k >= 2} S_{t,k}``."""
        return float(self.derivs[1:].min())

    @property
    def cutoffs(self) -> np.ndarray:
        """Cumulative masses ``c_i = mu_t({1..i}) = 1 - G_{i+1}`` for ``i = 1..r-1``."""
        return 1.0 - self.tails[1:]


@dataclass(frozen=True)
class SStar:
    value: float
    t: float
    k: int
    grid_points: int


@dataclass
class FamilyValidation:
    """Outcome of :func:`validate_family`; ``checks`` maps hypothesis name to pass/fail."""

    checks: dict[str, bool] = field(default_factory=dict)
    messages: dict[str, str] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        return {"ok": self.ok, "checks": dict(self.checks), "messages": dict(self.messages),
                "flags": list(self.flags)}


class MeasureFamily:
    """A family of measures on {1..r} indexed by ``t`` in the open interval ``(a, b)``.

    Parameters
    ----------
    r : int
        Alphabet size.
    interval : (float, float)
        Open parameter interval.
    tails : callable
        ``tails(t)`` returns ``(G_2(t), ..., G_r(t))``.
    derivs : callable, optional
        ``derivs(t)`` returns ``(S_{t,2}, ..., S_{t,r})``; central finite
        differences of ``tails`` are used when omitted.
    """

    def __init__(self, r: int, interval: tuple[float, float], tails: Callable[[float], np.ndarray],
                 derivs: Callable[[float], np.ndarray] | None = None, *, kind: str = "custom",
                 params: dict | None = None, fd_step: float = DEFAULT_FD_STEP):
        if int(r) != r or r < 2:
            raise InputError(f"r must be an integer >= 2, got {r!r}")
        a, b = (float(v) for v in interval)
        if not a < b:
            raise InputError(f"interval needs a < b, got ({a}, {b})")
        if fd_step <= 0:
            raise InputError("fd_step must be positive")
        self.r = int(r)
        self.interval = (a, b)
        self.kind = kind
        self.params = dict(params or {})
        self.fd_step = fd_step
        self._tails = tails
        self._derivs = derivs

    @classmethod
    def embedded(cls, r: int = 2) -> "MeasureFamily":
        return cls(r, (0.0, 1.0), lambda t: np.full(r - 1, t), lambda t: np.ones(r - 1),
                   kind="embedded")

    @classmethod
    def power(cls, alpha) -> "MeasureFamily":
        """``G_k(t) = t ** alpha[k-2]``; ``r = len(alpha) + 1``."""
        alpha = np.asarray(alpha, dtype=float)
        if alpha.ndim != 1 or alpha.size < 1 or np.any(alpha <= 0):
            raise InputError(f"power family needs a non-empty list of positive exponents, got {alpha.tolist()}")
        return cls(alpha.size + 1, (0.0, 1.0), lambda t: t**alpha,
                   lambda t: alpha * t ** (alpha - 1.0), kind="power",
                   params={"alpha": alpha.tolist()})

    @classmethod
    def tabulated(cls, t_grid, tails, interval=None, fd_step: float = DEFAULT_FD_STEP) -> "MeasureFamily":
        """``tails[k-2][i]`` is ``G_k(t_grid[i])``."""
        t_grid = np.asarray(t_grid, dtype=float)
        tails = np.atleast_2d(np.asarray(tails, dtype=float))
        if t_grid.ndim != 1 or t_grid.size < 2 or np.any(np.diff(t_grid) <= 0):
            raise InputError("tabulated grid must be a strictly increasing list of >= 2 points")
        if tails.shape[1] != t_grid.size:
            raise InputError(f"each tail needs {t_grid.size} values, got shape {tails.shape}")
        lo, hi = t_grid[0], t_grid[-1]
        if interval is None:
            interval = (lo, hi)
        if interval[0] < lo or interval[1] > hi:
            raise InputError(f"interval {tuple(interval)} extends beyond the tabulated grid [{lo}, {hi}]")
        splines = [PchipInterpolator(t_grid, row, extrapolate=False) for row in tails]
        return cls(tails.shape[0] + 1, interval, lambda t: np.array([s(t) for s in splines], dtype=float),
                   kind="tabulated", fd_step=fd_step,
                   params={"grid": {"t": t_grid.tolist(), "tails": tails.tolist()}})

    # evaluation

    def contains(self, t: float) -> bool:
        a, b = self.interval
        return a < t < b

    def _require_inside(self, t: float) -> None:
        if not (math.isfinite(t) and self.contains(t)):
            raise DomainError(f"t={t} outside the open interval {self.interval}")

    def raw_tails(self, t: float) -> np.ndarray:
        """``(G_2(t), ..., G_r(t))`` without validation."""
        return np.asarray(self._tails(float(t)), dtype=float).reshape(self.r - 1)

    def _fd(self, t: float, h: float) -> np.ndarray:
        a, b = self.interval
        h = min(h, (t - a) / 2, (b - t) / 2)
        return (self.raw_tails(t + h) - self.raw_tails(t - h)) / (2 * h)

    def raw_derivs(self, t: float) -> tuple[np.ndarray, str, float]:
        if self._derivs is not None:
            return np.asarray(self._derivs(float(t)), dtype=float).reshape(self.r - 1), "analytic", 0.0
        d1 = self._fd(t, self.fd_step)
        d2 = self._fd(t, self.fd_step / 2)
        return d2, "finite-difference", float(np.max(np.abs(d1 - d2)))

    def to_json(self) -> dict:
        doc = {"r": self.r, "kind": self.kind, "interval": list(self.interval)}
        if self.kind == "power":
            doc["alpha"] = list(self.params["alpha"])
        elif self.kind == "tabulated":
            doc["grid"] = self.params["grid"]
        elif self.kind != "embedded":
            raise InputError(f"a {self.kind!r} family has no JSON form")
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "MeasureFamily":
        kind = doc.get("kind")
        try:
            if kind == "embedded":
                fam = cls.embedded(int(doc["r"]))
            elif kind == "power":
                fam = cls.power(doc["alpha"])
            elif kind == "tabulated":
                grid = doc["grid"]
                fam = cls.tabulated(grid["t"], grid["tails"], doc.get("interval"))
            else:
                raise InputError(f"unknown family kind {kind!r}")
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed family definition: {exc}") from None
        if "r" in doc and int(doc["r"]) != fam.r:
            raise InputError(f"family declares r={doc['r']} but its tails imply r={fam.r}")
        if kind != "tabulated" and "interval" in doc and tuple(map(float, doc["interval"])) != fam.interval:
            raise InputError(f"{kind} families live on {fam.interval}, got interval {doc['interval']}")
        return fam

    def __repr__(self) -> str:
        extra = f", alpha={self.params['alpha']}" if self.kind == "power" else ""
        return f"MeasureFamily({self.kind}, r={self.r}, interval={self.interval}{extra})"


def pmf_at(family: MeasureFamily, t: float) -> PmfSnapshot:
    family._require_inside(t)
    g = family.raw_tails(t)
    tails = np.concatenate(([1.0], g))
    bad = np.nonzero(np.isnan(g) | (g < -PMF_TOL) | (g > 1 + PMF_TOL))[0]
    if bad.size:
        k = int(bad[0]) + 2
        raise ValidationError(f"G_{k}({t}) = {g[bad[0]]} is not a probability")
    order = np.nonzero(np.diff(tails) > PMF_TOL)[0]
    if order.size:
        k = int(order[0]) + 2
        raise ValidationError(f"tails out of order at t={t}: G_{k} = {tails[k - 1]} > G_{k - 1} = {tails[k - 2]}")
    tails = np.clip(tails, 0.0, 1.0)
    probs = tails - np.append(tails[1:], 0.0)
    probs = np.clip(probs, 0.0, None)
    d, method, err = family.raw_derivs(t)
    return PmfSnapshot(float(t), probs, tails, np.concatenate(([0.0], d)), method, err)


def _interior_grid(family: MeasureFamily, grid_points: int) -> np.ndarray:
    a, b = family.interval
    return np.linspace(a, b, grid_points + 2)[1:-1]


def s_star_over(family: MeasureFamily, t1: float, t2: float,
                grid_points: int = DEFAULT_GRID_POINTS) -> SStar:
    """Grid minimum of ``min_{k >= 2} S_{t,k}`` over ``[t1, t2]``, with its argmin."""
    if grid_points < 2:
        raise InputError("grid_points must be >= 2")
    if t1 > t2:
        raise InputError(f"need t1 <= t2, got {t1} > {t2}")
    family._require_inside(t1)
    family._require_inside(t2)
    best = SStar(math.inf, t1, 2, grid_points)
    for t in np.linspace(t1, t2, grid_points):
        s = pmf_at(family, float(t)).derivs
        k = int(np.argmin(s[1:])) + 2
        if s[k - 1] < best.value:
            best = SStar(float(s[k - 1]), float(t), k, grid_points)
    return best


def validate_family(family: MeasureFamily, grid_points: int = DEFAULT_GRID_POINTS,
                    boundary_tol: float = 1e-3, s_star_tol: float = 1e-9) -> FamilyValidation:
    """Check the structural hypotheses on an interior grid; never raises on failure.

    Checks: ``pmf`` (valid pmf at every grid point), ``tails_increasing``
    (each ``G_k``, ``k >= 2``, strictly increasing along the grid),
    ``boundary_low`` (``G_2 -> 0`` at ``a``), ``boundary_high`` (``G_r -> 1`` at
    ``b``).  A grid infimum of ``S`` within ``s_star_tol`` of zero is flagged,
    not failed.
    """
    rep = FamilyValidation()
    ts = _interior_grid(family, grid_points)
    tails = np.array([family.raw_tails(t) for t in ts])

    problems = []
    for t, g in zip(ts, tails):
        try:
            pmf_at(family, float(t))
        except ValidationError as exc:
            problems.append(str(exc))
    rep.checks["pmf"] = not problems
    if problems:
        rep.messages["pmf"] = f"{len(problems)} grid points invalid; first: {problems[0]}"

    steps = np.diff(tails, axis=0)
    bad_k = [k + 2 for k in range(family.r - 1) if not np.all(steps[:, k] > 0)]
    rep.checks["tails_increasing"] = not bad_k
    if bad_k:
        rep.messages["tails_increasing"] = f"G_k not strictly increasing on the grid for k = {bad_k}"

    a, b = family.interval
    eps = 1e-6 * (b - a)
    low = float(family.raw_tails(a + eps)[0])
    high = float(family.raw_tails(b - eps)[-1])
    rep.checks["boundary_low"] = bool(low < boundary_tol)
    rep.checks["boundary_high"] = bool(high > 1 - boundary_tol)
    if not rep.checks["boundary_low"]:
        rep.messages["boundary_low"] = f"G_2(a+eps) = {low} not below {boundary_tol}"
    if not rep.checks["boundary_high"]:
        rep.messages["boundary_high"] = f"G_r(b-eps) = {high} not above {1 - boundary_tol}"

    if rep.checks["pmf"]:
        s_min = min(pmf_at(family, float(t)).s_star for t in ts)
        if s_min <= s_star_tol:
            rep.flags.append(f"grid infimum of S_t,k is {s_min:.3g}: threshold bounds degenerate")
    return rep
