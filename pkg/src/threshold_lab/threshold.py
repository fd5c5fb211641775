"""Parameter sweeps, threshold-bound verification and threshold windows.

Suprema and infima over ``[t1, t2]`` are taken over the sweep grid points in
that interval; the grid resolution is attached to every verdict.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InputError, InvariantError, NoCrossingError
from .events import IncreasingEvent, require_monotone
from .exact import PointReport, disj_check, gamma_star, point_report
from .families import MeasureFamily, pmf_at
from .montecarlo import DEFAULT_SAMPLES, coupled_estimates

BOUND_TOL = 1e-9
CHAIN_TOL = 1e-12
CURVE_TOL = 1e-12
CHAIN_EXPONENT = 1 - 1 / math.e


def default_grid(family: MeasureFamily, grid_points: int, t1: float | None = None,
                 t2: float | None = None) -> np.ndarray:
    """``grid_points`` uniform points on ``[t1, t2]``, or strictly inside the family interval."""
    if grid_points < 2:
        raise InputError("grid_points must be >= 2")
    if t1 is None and t2 is None:
        a, b = family.interval
        return np.linspace(a, b, grid_points + 2)[1:-1]
    if t1 is None or t2 is None:
        raise InputError("give both t1 and t2, or neither")
    if not t1 < t2:
        raise InputError(f"need t1 < t2, got t1={t1}, t2={t2}")
    return np.linspace(t1, t2, grid_points)


@dataclass
class SweepResult:
    grid: np.ndarray
    reports: list[PointReport]
    mode: str = "exact"
    samples: int | None = None
    seed: int | None = None

    @property
    def nu(self) -> np.ndarray:
        return np.array([p.nu for p in self.reports])

    @property
    def gamma(self) -> np.ndarray:
        return np.array([p.gamma_t for p in self.reports])

    @property
    def gamma_t_star(self) -> np.ndarray:
        return np.array([p.gamma_t_star for p in self.reports])

    @property
    def s_t_star(self) -> np.ndarray:
        return np.array([p.s_t_star for p in self.reports])

    @property
    def resolution(self) -> float:
        return float(np.max(np.diff(self.grid))) if len(self.grid) > 1 else 0.0

    @property
    def gamma_star(self) -> float:
        return float(self.gamma_t_star.max())

    @property
    def eta_star(self) -> float:
        return float(self.gamma.max())

    @property
    def s_star(self) -> float:
        return float(self.s_t_star.min())

    def index(self, t: float) -> int:
        hits = np.nonzero(np.isclose(self.grid, t, rtol=0, atol=1e-12))[0]
        if hits.size == 0:
            raise InputError(f"t={t} is not a grid point of this sweep")
        return int(hits[0])

    def csv_header(self) -> list[str]:
        return self.reports[0].csv_header()

    def csv_rows(self) -> list[list]:
        return [p.csv_row() for p in self.reports]


def sweep(event: IncreasingEvent, family: MeasureFamily, t_grid, mode: str = "exact",
          samples: int = DEFAULT_SAMPLES, seed: int = 0, check_monotone: bool = True) -> SweepResult:
    """Point reports along a strictly increasing grid inside the family interval.

    ``mode="mc"`` estimates nu, influences and pivotal probabilities with
    common random numbers; the derivative is then unavailable and the
    pointwise inequality checks are marked ``"skipped"``.
    """
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise InputError("t_grid must be a non-empty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise InputError("t_grid must be strictly increasing")
    for t in grid:
        pmf_at(family, float(t))
    if mode == "exact":
        reports = [point_report(event, family, float(t)) for t in grid]
        nu = np.array([p.nu for p in reports])
        if np.any(np.diff(nu) < -CURVE_TOL):
            raise InvariantError("nu_t decreases along the grid; the event is not increasing")
        return SweepResult(grid, reports)
    if mode != "mc":
        raise InputError(f"mode must be 'exact' or 'mc', got {mode!r}")
    if check_monotone:
        require_monotone(event)
    est = coupled_estimates(event, family, grid, samples=samples, seed=seed)
    reports = []
    for a, t in enumerate(grid):
        nu = est.nu[a].value
        infl = tuple(e.value for e in est.influences[a])
        piv = tuple(e.value for e in est.pivotal[a])
        total, gamma = float(sum(infl)), max(piv)
        residual, _ = disj_check(total, nu * (1 - nu), gamma)
        reports.append(PointReport(float(t), nu, nu * (1 - nu), infl, total, piv, gamma, gamma_star(gamma),
                                   None, pmf_at(family, float(t)).s_star, None, "skipped",
                                   residual, "skipped"))
    return SweepResult(grid, reports, "mc", samples, seed)


@dataclass(frozen=True)
class BoundCheck:
    t1: float
    t2: float
    lhs: float
    rhs: float
    residual: float | None
    status: str
    gamma_star: float
    s_star: float
    grid_resolution: float

    def to_json(self) -> dict:
        return asdict(self)


def _span(sw: SweepResult, t1: float, t2: float) -> tuple[int, int]:
    if t1 > t2:
        raise InputError(f"need t1 <= t2, got {t1} > {t2}")
    return sw.index(t1), sw.index(t2)


def _threshold_check(lhs: float, g: float, s: float, dt: float, t1, t2, res: float, tol: float) -> BoundCheck:
    if dt == 0:
        return BoundCheck(t1, t2, lhs, 1.0, 1.0 - lhs, "pass" if lhs <= 1.0 + tol else "fail", g, s, res)
    if g <= 0 or g >= 1:
        return BoundCheck(t1, t2, lhs, math.nan, None, "vacuous", g, s, res)
    rhs = g ** (s * dt)
    return BoundCheck(t1, t2, lhs, rhs, rhs - lhs, "pass" if rhs - lhs >= -tol else "fail", g, s, res)


def verify_threshold_bound(sw: SweepResult, t1: float, t2: float, tol: float = BOUND_TOL) -> BoundCheck:
    """``nu_{t1}(1 - nu_{t2}) <= gamma_* ** (S* (t2 - t1))`` with sup/inf over the grid in ``[t1, t2]``."""
    i1, i2 = _span(sw, t1, t2)
    nu = sw.nu
    g = float(sw.gamma_t_star[i1:i2 + 1].max())
    s = float(sw.s_t_star[i1:i2 + 1].min())
    return _threshold_check(float(nu[i1] * (1 - nu[i2])), g, s, float(sw.grid[i2] - sw.grid[i1]),
                      float(sw.grid[i1]), float(sw.grid[i2]), sw.resolution, tol)


@dataclass(frozen=True)
class RemarkCheck:
    t1: float
    t2: float
    eta_star: float
    gamma_star: float
    eta_power: float
    eta_sqrt: float
    chain_status: str
    lhs: float
    rhs: float
    residual: float | None
    status: str

    @property
    def passed(self) -> bool:
        return "fail" not in (self.chain_status, self.status)

    def to_json(self) -> dict:
        return asdict(self)


def _remark(lhs, eta, g, s, dt, t1, t2, tol, chain_tol) -> RemarkCheck:
    if eta <= 0 or eta >= 1:
        return RemarkCheck(t1, t2, eta, g, math.nan, math.nan, "vacuous", lhs, math.nan, None, "vacuous")
    power, root = eta**CHAIN_EXPONENT, math.sqrt(eta)
    chain = "pass" if g <= power + chain_tol and power <= root + chain_tol else "fail"
    rhs = eta ** (s * dt / 2)
    return RemarkCheck(t1, t2, eta, g, power, root, chain, lhs, rhs, rhs - lhs,
                       "pass" if rhs - lhs >= -tol else "fail")


def verify_remark_bound(sw: SweepResult, t1: float, t2: float, tol: float = BOUND_TOL,
                        chain_tol: float = CHAIN_TOL) -> RemarkCheck:
    """``gamma_* <= eta_*^(1-1/e) <= eta_*^(1/2)`` and ``nu_{t1}(1-nu_{t2}) <= eta_*^(S*(t2-t1)/2)``."""
    i1, i2 = _span(sw, t1, t2)
    nu = sw.nu
    return _remark(float(nu[i1] * (1 - nu[i2])), float(sw.gamma[i1:i2 + 1].max()),
                   float(sw.gamma_t_star[i1:i2 + 1].max()), float(sw.s_t_star[i1:i2 + 1].min()),
                   float(sw.grid[i2] - sw.grid[i1]), float(sw.grid[i1]), float(sw.grid[i2]), tol, chain_tol)


@dataclass
class PairSummary:
    """Aggregate of the threshold-bound and eta-bound checks over many grid pairs."""

    pairs: int = 0
    failures: int = 0
    vacuous: int = 0
    remark_failures: int = 0
    remark_vacuous: int = 0
    worst: BoundCheck | None = None
    worst_remark: RemarkCheck | None = None
    failed_pairs: list[tuple[float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.remark_failures == 0

    def to_json(self) -> dict:
        return {"pairs": self.pairs, "failures": self.failures, "vacuous": self.vacuous,
                "remark_failures": self.remark_failures, "remark_vacuous": self.remark_vacuous,
                "passed": self.passed,
                "worst": self.worst.to_json() if self.worst else None,
                "worst_remark": self.worst_remark.to_json() if self.worst_remark else None,
                "failed_pairs": [list(p) for p in self.failed_pairs[:20]]}


def verify_all_pairs(sw: SweepResult, max_pairs: int | None = None, seed: int = 0,
                     tol: float = BOUND_TOL) -> PairSummary:
    """Check every grid pair ``t1 <= t2``, or a seeded sample of ``max_pairs`` of them."""
    g = len(sw.grid)
    nu, gs, gamma, s = sw.nu, sw.gamma_t_star, sw.gamma, sw.s_t_star
    pairs = [(i, k) for i in range(g) for k in range(i, g)]
    if max_pairs is not None and max_pairs < len(pairs):
        rng = np.random.default_rng(seed)
        pairs = sorted(tuple(pairs[p]) for p in rng.choice(len(pairs), size=max_pairs, replace=False))
    out = PairSummary()
    for i1, i2 in pairs:
        lhs = float(nu[i1] * (1 - nu[i2]))
        dt = float(sw.grid[i2] - sw.grid[i1])
        g_star = float(gs[i1:i2 + 1].max())
        s_star = float(s[i1:i2 + 1].min())
        t1, t2 = float(sw.grid[i1]), float(sw.grid[i2])
        chk = _threshold_check(lhs, g_star, s_star, dt, t1, t2, sw.resolution, tol)
        rem = _remark(lhs, float(gamma[i1:i2 + 1].max()), g_star, s_star, dt, t1, t2, tol, CHAIN_TOL)
        out.pairs += 1
        if chk.status == "vacuous":
            out.vacuous += 1
        else:
            if chk.status == "fail":
                out.failures += 1
                out.failed_pairs.append((t1, t2))
            if out.worst is None or chk.residual < out.worst.residual:
                out.worst = chk
        if rem.status == "vacuous":
            out.remark_vacuous += 1
        else:
            if not rem.passed:
                out.remark_failures += 1
            if out.worst_remark is None or rem.residual < out.worst_remark.residual:
                out.worst_remark = rem
    return out


@dataclass(frozen=True)
class Window:
    epsilon: float
    t_lo: float
    t_hi: float
    width: float
    bound_ceiling: float
    gamma_star: float
    s_star: float
    grid_resolution: float

    @property
    def within_ceiling(self) -> bool:
        return self.width <= self.bound_ceiling + self.grid_resolution

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["within_ceiling"] = self.within_ceiling
        return doc


def _crossing(grid: np.ndarray, nu: np.ndarray, level: float) -> tuple[float, int]:
    idx = int(np.argmax(nu >= level))
    if nu[idx] < level:
        raise NoCrossingError(f"nu_t stays below {level} on the grid")
    if idx == 0:
        if nu[0] > level:
            raise NoCrossingError(f"nu_t already exceeds {level} at the first grid point")
        return float(grid[0]), 0
    lo, hi = nu[idx - 1], nu[idx]
    frac = (level - lo) / (hi - lo)
    return float(grid[idx - 1] + frac * (grid[idx] - grid[idx - 1])), idx


def threshold_window(sw: SweepResult, epsilon: float) -> Window:
    """Interval on which nu_t climbs from ``epsilon`` to ``1 - epsilon``, with its ceiling.

    Crossings are linearly interpolated.  The ceiling solves
    ``gamma_* ** (S* w) = epsilon (1 - epsilon)`` for ``w``, with ``gamma_*`` and
    ``S*`` taken over the grid points bracketing the window.
    """
    if not 0 < epsilon < 0.5:
        raise InputError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    nu = sw.nu
    t_lo, i_lo = _crossing(sw.grid, nu, epsilon)
    t_hi, i_hi = _crossing(sw.grid, nu, 1 - epsilon)
    lo = max(i_lo - 1, 0)
    g = float(sw.gamma_t_star[lo:i_hi + 1].max())
    s = float(sw.s_t_star[lo:i_hi + 1].min())
    if 0 < g < 1 and s > 0:
        ceiling = math.log(1 / (epsilon * (1 - epsilon))) / (s * math.log(1 / g))
    else:
        ceiling = math.inf
    return Window(epsilon, t_lo, t_hi, t_hi - t_lo, ceiling, g, s, sw.resolution)
