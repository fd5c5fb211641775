"""Slow, independent reference computations used as test oracles.

Everything here works from a plain clause list and closed-form tails with
explicit ``itertools.product`` loops, sharing no code with the package's
engines beyond the event/family constructors used to build the inputs.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from threshold_lab import IncreasingEvent, MeasureFamily


def indicator(clauses, x) -> int:
    return int(any(all(x[j] >= a for j, a in clause) for clause in clauses))


def oracle_tails(kind: str, r: int, alpha, t: float) -> list[float]:
    """``[G_1, ..., G_r]`` with ``G_1 = 1``."""
    if kind == "embedded":
        return [1.0] + [t] * (r - 1)
    return [1.0] + [t**a for a in alpha]


def oracle_tail_derivs(kind: str, r: int, alpha, t: float) -> list[float]:
    if kind == "embedded":
        return [0.0] + [1.0] * (r - 1)
    return [0.0] + [a * t ** (a - 1) for a in alpha]


def oracle_pmf(kind, r, alpha, t) -> list[float]:
    g = oracle_tails(kind, r, alpha, t) + [0.0]
    return [g[k] - g[k + 1] for k in range(r)]


def oracle_dpmf(kind, r, alpha, t) -> list[float]:
    d = oracle_tail_derivs(kind, r, alpha, t) + [0.0]
    return [d[k] - d[k + 1] for k in range(r)]


def make_family(kind: str, r: int, alpha=None) -> MeasureFamily:
    return MeasureFamily.embedded(r) if kind == "embedded" else MeasureFamily.power(alpha)


def make_event(n, r, clauses) -> IncreasingEvent:
    return IncreasingEvent.from_clauses(n, r, clauses)


def configs(n, r):
    # coordinate 0 varies fastest, like rank order
    for rev in itertools.product(range(1, r + 1), repeat=n):
        yield tuple(reversed(rev))


def weight(x, p) -> float:
    w = 1.0
    for v in x:
        w *= p[v - 1]
    return w


def set_coord(x, j, k):
    y = list(x)
    y[j] = k
    return tuple(y)


def naive_measure(clauses, n, r, p) -> float:
    return sum(weight(x, p) * indicator(clauses, x) for x in configs(n, r))


def naive_influence(clauses, n, r, p, j) -> float:
    return sum(weight(x, p) * (indicator(clauses, set_coord(x, j, r)) - indicator(clauses, set_coord(x, j, 1)))
               for x in configs(n, r))


def naive_pivotal(clauses, n, r, p, j) -> float:
    return sum(weight(x, p) for x in configs(n, r)
               if indicator(clauses, x) and not indicator(clauses, set_coord(x, j, 1)))


def naive_derivative(clauses, n, r, p, dp) -> float:
    """Product rule on ``sum_x f(x) prod_j p(x_j)``."""
    total = 0.0
    for x in configs(n, r):
        if not indicator(clauses, x):
            continue
        for j in range(n):
            term = dp[x[j] - 1]
            for i in range(n):
                if i != j:
                    term *= p[x[i] - 1]
            total += term
    return total


def boolean_russo(clauses, n, t) -> float:
    """Classical Russo on ``{0,1}^n``: sum over j of P(j pivotal) for r = 2."""
    total = 0.0
    for bits in itertools.product((0, 1), repeat=n):
        w = math.prod(t if b else 1 - t for b in bits)
        x = tuple(b + 1 for b in bits)
        for j in range(n):
            total += w * (indicator(clauses, set_coord(x, j, 2)) - indicator(clauses, set_coord(x, j, 1)))
    return total


def quantile_level(u: float, tails) -> int:
    """Level ``1 + #{i : u >= 1 - G_{i+1}}``."""
    return 1 + sum(1 for g in tails[1:] if u >= 1 - g)


def naive_lift(clauses, n, r, tails, m):
    """Brute force over all ``2^(m n)`` digit states of the truncated model.

    Returns ``(abs_moments, sq_moments, M1, M2, V, nu, pivotal, influences, q)``
    where the moment arrays have shape ``(m, n)`` indexed ``[i-1, j]``.
    """
    points = [k / 2**m for k in range(2**m)]
    q = np.zeros(r)
    for u in points:
        q[quantile_level(u, tails) - 1] += 1 / 2**m
    states = list(itertools.product((0, 1), repeat=m * n))

    def g(state):
        x = []
        for j in range(n):
            digits = state[j * m:(j + 1) * m]
            u = sum(d / 2 ** (i + 1) for i, d in enumerate(digits))
            x.append(quantile_level(u, tails))
        return indicator(clauses, x)

    val = {s: g(s) for s in states}
    abs_m = np.zeros((m, n))
    sq_m = np.zeros((m, n))
    for j in range(n):
        for i in range(m):
            pos = j * m + i
            for s in states:
                s0 = s[:pos] + (0,) + s[pos + 1:]
                s1 = s[:pos] + (1,) + s[pos + 1:]
                delta = val[s] - 0.5 * (val[s0] + val[s1])
                abs_m[i, j] += abs(delta) / len(states)
                sq_m[i, j] += delta**2 / len(states)
    nu = sum(val.values()) / len(states)
    piv = [naive_pivotal(clauses, n, r, q, j) for j in range(n)]
    inf = [naive_influence(clauses, n, r, q, j) for j in range(n)]
    return abs_m, sq_m, float(np.sum(abs_m**2)), float(np.sum(sq_m)), nu * (1 - nu), nu, piv, inf, q


def random_dnf(rng: np.random.Generator, max_n: int = 4, max_r: int = 3):
    """Seeded random monotone DNF ``(n, r, clauses)`` with every threshold ``>= 2``."""
    n = int(rng.integers(1, max_n + 1))
    r = int(rng.integers(2, max_r + 1))
    clauses = []
    for _ in range(int(rng.integers(1, 5))):
        coords = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
        clauses.append([(int(j), int(rng.integers(2, r + 1))) for j in sorted(coords)])
    return n, r, clauses


def family_for(r: int, rng: np.random.Generator):
    """``(kind, alpha)`` for an ``r``-level test family."""
    if r == 2 or rng.random() < 0.5:
        return "embedded", None
    return "power", (1.0, 2.0)
