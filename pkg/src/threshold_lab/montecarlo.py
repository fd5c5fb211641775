"""Monte Carlo estimators for event probabilities beyond the enumeration cap.

Configurations are drawn by pushing i.i.d. uniforms through the quantile map,
so estimates at several ``t`` can share the same uniforms (common random
numbers).  Because every cutoff ``mu_t({1..i})`` decreases in ``t``, the
coupled configurations increase coordinate-wise with ``t`` and the coupled
indicator of an increasing event is monotone sample by sample.

Random streams come from a counter-based Philox generator keyed by
``(seed, operation, t, j)``; sample blocks use spawned child streams so the
result does not depend on how blocks are scheduled.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import binomtest

from .errors import InputError, InvariantError
from .events import IncreasingEvent
from .families import MeasureFamily, pmf_at
from .lift import _levels

DEFAULT_SAMPLES = 100_000
DEFAULT_LEVEL = 0.99
BLOCK = 1 << 16


def substream_key(seed: int, op: str, t: float = 0.0, j: int = -1) -> list[int]:
    hi, lo = struct.unpack("<II", struct.pack("<d", float(t)))
    return [int(seed) & 0xFFFFFFFF, zlib.crc32(op.encode()), hi, lo, j + 1]


def substream(seed: int, op: str, t: float = 0.0, j: int = -1) -> np.random.SeedSequence:
    return np.random.SeedSequence(substream_key(seed, op, t, j))


def make_rng(seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seq))


def levels_from_uniforms(family: MeasureFamily, t: float, u: np.ndarray) -> np.ndarray:
    return _levels(pmf_at(family, t).cutoffs, u).astype(np.int16)


def sample_configs(family: MeasureFamily, t: float, n: int, size: int,
                   rng: np.random.Generator) -> np.ndarray:
    return levels_from_uniforms(family, t, rng.random((size, n)))


def sample_config(family: MeasureFamily, t: float, n: int, rng: np.random.Generator) -> tuple[int, ...]:
    """One draw from ``mu_t^{(x) n}``."""
    return tuple(int(v) for v in sample_configs(family, t, n, 1, rng)[0])


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    level: float
    lo: float
    hi: float
    samples: int
    seed: int
    substream: list[int]

    def covers(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def to_json(self) -> dict:
        return asdict(self)


def wilson(successes: int, samples: int, level: float, seed: int, key: list[int]) -> Estimate:
    p = successes / samples
    ci = binomtest(successes, samples).proportion_ci(confidence_level=level, method="wilson")
    lo, hi = min(float(ci.low), p), max(float(ci.high), p)
    return Estimate(p, math.sqrt(p * (1 - p) / samples), level, lo, hi, samples, seed, key)


def exact_estimate(value: float, samples: int, level: float, seed: int, key: list[int]) -> Estimate:
    return Estimate(value, 0.0, level, value, value, samples, seed, key)


def _check_args(event: IncreasingEvent, family: MeasureFamily, samples: int, level: float) -> None:
    if event.r != family.r:
        raise InputError(f"event has r={event.r} but family has r={family.r}")
    if samples < 100:
        raise InputError(f"need at least 100 samples, got {samples}")
    if not 0 < level < 1:
        raise InputError(f"confidence level must lie in (0, 1), got {level}")


def _blocks(seq: np.random.SeedSequence, samples: int):
    count = -(-samples // BLOCK)
    for b, child in enumerate(seq.spawn(count)):
        yield make_rng(child), min(BLOCK, samples - b * BLOCK)


def _count(event, family, t, samples, seq, stat) -> int:
    total = 0
    for rng, size in _blocks(seq, samples):
        xs = sample_configs(family, t, event.n, size, rng)
        total += int(np.count_nonzero(stat(xs)))
    return total


def _pivotal_stat(event: IncreasingEvent, j: int):
    def stat(xs):
        low = xs.copy()
        low[:, j] = 1
        return event.evaluate_many(xs) & ~event.evaluate_many(low)
    return stat


def _influence_stat(event: IncreasingEvent, j: int):
    def stat(xs):
        top, low = xs.copy(), xs.copy()
        top[:, j] = event.r
        low[:, j] = 1
        return event.evaluate_many(top) & ~event.evaluate_many(low)
    return stat


def estimate_measure(event: IncreasingEvent, family: MeasureFamily, t: float,
                     samples: int = DEFAULT_SAMPLES, seed: int = 0,
                     level: float = DEFAULT_LEVEL) -> Estimate:
    """Sample mean of the indicator with a Wilson interval.

    Constant events are recognised exactly and get a zero-width interval.
    """
    _check_args(event, family, samples, level)
    seq = substream(seed, "estimate_measure", t)
    key = substream_key(seed, "estimate_measure", t)
    pmf_at(family, t)
    if event.is_constant:
        return exact_estimate(float(event.evaluate((1,) * event.n)), samples, level, seed, key)
    return wilson(_count(event, family, t, samples, seq, event.evaluate_many), samples, level, seed, key)


def estimate_pivotal(event: IncreasingEvent, family: MeasureFamily, t: float, j: int,
                     samples: int = DEFAULT_SAMPLES, seed: int = 0,
                     level: float = DEFAULT_LEVEL) -> Estimate:
    """Estimate of ``nu_t(A_j)``, ``A_j = {x in A : f(x | x_j = 1) = 0}``."""
    _check_args(event, family, samples, level)
    if not 0 <= j < event.n:
        raise InputError(f"coordinate {j} outside [0, {event.n})")
    key = substream_key(seed, "estimate_pivotal", t, j)
    pmf_at(family, t)
    if event.is_constant:
        return exact_estimate(0.0, samples, level, seed, key)
    hits = _count(event, family, t, samples, substream(seed, "estimate_pivotal", t, j),
                  _pivotal_stat(event, j))
    return wilson(hits, samples, level, seed, key)


def estimate_influence(event: IncreasingEvent, family: MeasureFamily, t: float, j: int,
                       samples: int = DEFAULT_SAMPLES, seed: int = 0,
                       level: float = DEFAULT_LEVEL) -> Estimate:
    _check_args(event, family, samples, level)
    if not 0 <= j < event.n:
        raise InputError(f"coordinate {j} outside [0, {event.n})")
    key = substream_key(seed, "estimate_influence", t, j)
    pmf_at(family, t)
    if event.is_constant:
        return exact_estimate(0.0, samples, level, seed, key)
    hits = _count(event, family, t, samples, substream(seed, "estimate_influence", t, j),
                  _influence_stat(event, j))
    return wilson(hits, samples, level, seed, key)


@dataclass
class CoupledEstimates:
    """Estimates at several ``t`` from one shared set of uniforms."""

    ts: list[float]
    nu: list[Estimate]
    pivotal: list[list[Estimate]]
    influences: list[list[Estimate]]
    dominated: bool


def coupled_estimates(event: IncreasingEvent, family: MeasureFamily, ts, samples: int = DEFAULT_SAMPLES,
                      seed: int = 0, level: float = DEFAULT_LEVEL, with_coordinates: bool = True
                      ) -> CoupledEstimates:
    """Common-random-number estimates of ``nu_t``, ``nu_t(A_j)`` and ``Inf_j`` along ``ts``.

    Raises :class:`InvariantError` if the coupled indicators fail to increase
    with ``t`` on some sample, or the coupled levels fail to dominate.
    """
    _check_args(event, family, samples, level)
    ts = [float(t) for t in ts]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise InputError("coupled estimates need strictly increasing t values")
    for t in ts:
        pmf_at(family, t)
    n, k = event.n, len(ts)
    hits = np.zeros(k, dtype=np.int64)
    piv = np.zeros((k, n), dtype=np.int64)
    inf = np.zeros((k, n), dtype=np.int64)
    dominated = True
    for rng, size in _blocks(substream(seed, "coupled_estimates"), samples):
        u = rng.random((size, n))
        prev_x = prev_f = None
        for a, t in enumerate(ts):
            xs = levels_from_uniforms(family, t, u)
            f = event.evaluate_many(xs)
            if prev_x is not None:
                dominated &= bool(np.all(xs >= prev_x)) and bool(np.all(f >= prev_f))
            prev_x, prev_f = xs, f
            hits[a] += np.count_nonzero(f)
            if with_coordinates:
                for j in range(n):
                    piv[a, j] += np.count_nonzero(_pivotal_stat(event, j)(xs))
                    inf[a, j] += np.count_nonzero(_influence_stat(event, j)(xs))
    if not dominated:
        raise InvariantError("common-random-number coupling is not monotone in t; is the event increasing?")
    key = substream_key(seed, "coupled_estimates")

    def est(c):
        return wilson(int(c), samples, level, seed, key)

    return CoupledEstimates(
        ts, [est(c) for c in hits],
        [[est(c) for c in row] for row in piv] if with_coordinates else [],
        [[est(c) for c in row] for row in inf] if with_coordinates else [],
        dominated,
    )


def coupled_indicators(event: IncreasingEvent, family: MeasureFamily, ts, samples: int,
                       seed: int = 0) -> np.ndarray:
    """``(len(ts), samples)`` boolean matrix of ``1_A(F_t(u))`` on shared uniforms."""
    rng = make_rng(substream(seed, "coupled_indicators"))
    u = rng.random((samples, event.n))
    return np.array([event.evaluate_many(levels_from_uniforms(family, float(t), u)) for t in ts])
