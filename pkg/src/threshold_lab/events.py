"""Configurations and increasing events on {1, ..., r}^n.

A configuration is a tuple of ``n`` integer levels in ``1..r``.  Configurations
are ranked in mixed radix with coordinate 0 least significant, so rank
``sum_j (x_j - 1) * r**j``.

Events are stored in one of three representations:

* ``"dnf"``: a union of :class:`MonotoneClause` objects,
* ``"table"``: a truth table indexed by rank,
* ``"builtin"``: a named family (dictator, k_of_n, majority, tribes).

Whatever the representation, :meth:`IncreasingEvent.table` materialises the
indicator as an ``n``-dimensional boolean array whose axis ``j`` is coordinate
``j`` (level ``k`` at index ``k - 1``).  Flattening it in Fortran order gives
the rank order above.
"""

from __future__ import annotations

import base64
import itertools
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError, InputError, MonotonicityError

DEFAULT_CAP = 2**24
CAP_ENV = "THRESHOLD_LAB_CAP"

BUILTINS = ("dictator", "k_of_n", "majority", "tribes")


def enumeration_cap() -> int:
    """Largest ``r**n`` (or lift state count) that may be enumerated."""
    raw = os.environ.get(CAP_ENV)
    if raw is None:
        return DEFAULT_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise InputError(f"{CAP_ENV} must be an integer, got {raw!r}") from None
    if cap < 1:
        raise InputError(f"{CAP_ENV} must be positive, got {cap}")
    return cap


def check_capacity(size: int, what: str = "configuration space", cap: int | None = None) -> None:
    cap = enumeration_cap() if cap is None else cap
    if size > cap:
        raise CapacityError(
            f"{what} has {size} states, above the enumeration cap {cap}; "
            f"use Monte Carlo mode or set {CAP_ENV}"
        )


def _check_dims(n: int, r: int) -> None:
    if int(n) != n or n < 1:
        raise InputError(f"n must be a positive integer, got {n!r}")
    if int(r) != r or r < 2:
        raise InputError(f"r must be an integer >= 2, got {r!r}")


# -- configurations ---------------------------------------------------------


def validate_config(x: Sequence[int], n: int, r: int) -> tuple[int, ...]:
    x = tuple(int(v) for v in x)
    if len(x) != n:
        raise InputError(f"configuration has length {len(x)}, expected n={n}")
    for j, v in enumerate(x):
        if not 1 <= v <= r:
            raise InputError(f"coordinate {j} has level {v}, outside 1..{r}")
    return x


def rank(x: Sequence[int], r: int) -> int:
    """Mixed-radix rank of ``x``; coordinate 0 is least significant."""
    out = 0
    for v in reversed(x):
        out = out * r + (v - 1)
    return out


def unrank(index: int, n: int, r: int) -> tuple[int, ...]:
    if not 0 <= index < r**n:
        raise InputError(f"rank {index} outside [0, {r**n})")
    levels = []
    for _ in range(n):
        index, digit = divmod(index, r)
        levels.append(digit + 1)
    return tuple(levels)


def flip_coordinate(x: Sequence[int], j: int, k: int, r: int | None = None) -> tuple[int, ...]:
    """Return ``x`` with coordinate ``j`` set to level ``k``.

    ``r`` bounds the admissible level; when omitted only ``k >= 1`` is checked.
    """
    x = tuple(x)
    if not 0 <= j < len(x):
        raise InputError(f"coordinate {j} outside [0, {len(x)})")
    if k < 1 or (r is not None and k > r):
        raise InputError(f"level {k} outside 1..{r if r is not None else 'r'}")
    return x[:j] + (k,) + x[j + 1:]


def enumerate_configs(n: int, r: int, cap: int | None = None) -> Iterator[tuple[int, ...]]:
    """Yield every configuration of {1..r}^n in rank order.

    Each call returns a fresh iterator.
    """
    _check_dims(n, r)
    check_capacity(r**n, cap=cap)
    return _configs(n, r)


def _configs(n: int, r: int) -> Iterator[tuple[int, ...]]:
    # itertools.product varies its last factor fastest; reverse for rank order
    for combo in itertools.product(range(1, r + 1), repeat=n):
        yield combo[::-1]


def all_configs_array(n: int, r: int) -> np.ndarray:
    """All configurations as an ``(r**n, n)`` array, rows in rank order."""
    check_capacity(r**n)
    ranks = np.arange(r**n)
    powers = r ** np.arange(n)
    return (ranks[:, None] // powers[None, :]) % r + 1


# -- events -----------------------------------------------------------------


@dataclass(frozen=True)
class MonotoneClause:
    """Conjunction ``x_j >= a_j`` over the listed ``(j, a_j)`` pairs."""

    literals: tuple[tuple[int, int], ...]

    def __post_init__(self):
        lits = tuple((int(j), int(a)) for j, a in self.literals)
        object.__setattr__(self, "literals", lits)

    def validate(self, n: int, r: int) -> None:
        for j, a in self.literals:
            if not 0 <= j < n:
                raise InputError(f"clause coordinate {j} outside [0, {n})")
            if not 2 <= a <= r:
                raise InputError(f"clause minimal level {a} outside 2..{r}")

    def satisfied(self, x: Sequence[int]) -> bool:
        return all(x[j] >= a for j, a in self.literals)


class IncreasingEvent:
    """Indicator of an event on {1..r}^n.

    Construct through :meth:`from_clauses`, :meth:`from_table`, or the
    built-in constructors.  Monotonicity is not assumed: call
    :func:`check_monotone` (or :func:`require_monotone`) before feeding an
    event to an analysis that presumes it.
    """

    def __init__(self, n: int, r: int, kind: str, *, clauses=None, table=None,
                 builtin: str | None = None, params: dict | None = None):
        _check_dims(n, r)
        self.n = int(n)
        self.r = int(r)
        self.kind = kind
        self.clauses: tuple[MonotoneClause, ...] = ()
        self.builtin = builtin
        self.params = dict(params or {})
        self._table = None
        if kind == "dnf":
            self.clauses = tuple(c if isinstance(c, MonotoneClause) else MonotoneClause(tuple(c))
                                 for c in clauses)
            for c in self.clauses:
                c.validate(self.n, self.r)
        elif kind == "table":
            arr = np.asarray(table, dtype=bool).reshape(-1)
            if arr.size != self.r**self.n:
                raise InputError(f"truth table has {arr.size} entries, expected r**n = {self.r**self.n}")
            self._table = arr.reshape((self.r,) * self.n, order="F")
            self._table.setflags(write=False)
        elif kind == "builtin":
            self._check_builtin()
        else:
            raise InputError(f"unknown event kind {kind!r}")

    # constructors

    @classmethod
    def from_clauses(cls, n: int, r: int, clauses) -> "IncreasingEvent":
        """``clauses`` is an iterable of ``[(coord, min_level), ...]`` lists."""
        return cls(n, r, "dnf", clauses=clauses)

    @classmethod
    def from_table(cls, n: int, r: int, bits) -> "IncreasingEvent":
        """``bits[rank]`` is the indicator value of the configuration ``unrank(rank)``."""
        return cls(n, r, "table", table=bits)

    @classmethod
    def dictator(cls, n: int, r: int, coord: int = 0, level: int = 2) -> "IncreasingEvent":
        return cls(n, r, "builtin", builtin="dictator", params={"coord": coord, "level": level})

    @classmethod
    def k_of_n(cls, n: int, r: int, k: int, level: int = 2) -> "IncreasingEvent":
        return cls(n, r, "builtin", builtin="k_of_n", params={"k": k, "level": level})

    @classmethod
    def majority(cls, n: int, r: int, level: int = 2) -> "IncreasingEvent":
        """``floor(n/2) + 1`` of ``n`` coordinates at or above ``level``."""
        return cls(n, r, "builtin", builtin="majority", params={"level": level})

    @classmethod
    def tribes(cls, block: int, blocks: int, r: int, level: int = 2) -> "IncreasingEvent":
        """Some block of ``block`` consecutive coordinates is entirely at or above ``level``."""
        return cls(block * blocks, r, "builtin", builtin="tribes",
                   params={"block": block, "blocks": blocks, "level": level})

    def _check_builtin(self) -> None:
        name, p, n, r = self.builtin, self.params, self.n, self.r
        if name not in BUILTINS:
            raise InputError(f"unknown builtin event {name!r}; expected one of {BUILTINS}")
        level = p.setdefault("level", 2)
        if not 2 <= level <= r:
            raise InputError(f"builtin level {level} outside 2..{r}")
        if name == "dictator":
            if not 0 <= p.get("coord", 0) < n:
                raise InputError(f"dictator coordinate {p.get('coord')} outside [0, {n})")
            p.setdefault("coord", 0)
        elif name == "k_of_n":
            if "k" not in p or not 0 <= p["k"] <= n + 1:
                raise InputError(f"k_of_n needs 0 <= k <= n+1, got {p.get('k')!r}")
        elif name == "majority":
            p["k"] = n // 2 + 1
        elif name == "tribes":
            if p.get("block", 0) < 1 or p.get("blocks", 0) < 1:
                raise InputError("tribes needs positive 'block' and 'blocks'")
            if p["block"] * p["blocks"] != n:
                raise InputError(f"tribes block*blocks = {p['block'] * p['blocks']} != n = {n}")

    # evaluation

    def evaluate(self, x: Sequence[int]) -> bool:
        x = validate_config(x, self.n, self.r)
        if self.kind == "dnf":
            return any(c.satisfied(x) for c in self.clauses)
        if self.kind == "table":
            return bool(self._table[tuple(v - 1 for v in x)])
        return bool(self.evaluate_many(np.asarray([x]))[0])

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        """Vectorised evaluation of an ``(N, n)`` integer array of levels."""
        xs = np.asarray(xs)
        if xs.ndim != 2 or xs.shape[1] != self.n:
            raise InputError(f"expected an (N, {self.n}) array of levels, got shape {xs.shape}")
        if xs.size and (xs.min() < 1 or xs.max() > self.r):
            raise InputError(f"levels must lie in 1..{self.r}")
        if self.kind == "table":
            return self._table[tuple((xs - 1).T)]
        if self.kind == "dnf":
            out = np.zeros(len(xs), dtype=bool)
            for c in self.clauses:
                hit = np.ones(len(xs), dtype=bool)
                for j, a in c.literals:
                    hit &= xs[:, j] >= a
                out |= hit
            return out
        return self._builtin_eval(xs >= self.params["level"])

    def _builtin_eval(self, high: np.ndarray) -> np.ndarray:
        # high[..., j] is "coordinate j at or above the builtin level"
        p = self.params
        if self.builtin == "dictator":
            return high[..., p["coord"]].copy()
        if self.builtin in ("k_of_n", "majority"):
            return high.sum(axis=-1) >= p["k"]
        blocks = high.reshape(high.shape[:-1] + (p["blocks"], p["block"]))
        return blocks.all(axis=-1).any(axis=-1)

    def table(self) -> np.ndarray:
        """Read-only boolean array of shape ``(r,) * n``; axis ``j`` is coordinate ``j``."""
        if self._table is None:
            check_capacity(self.r**self.n)
            self._table = self._build_table()
            self._table.setflags(write=False)
        return self._table

    def _build_table(self) -> np.ndarray:
        shape = (self.r,) * self.n
        lev = [np.arange(1, self.r + 1).reshape([self.r if a == j else 1 for a in range(self.n)])
               for j in range(self.n)]
        if self.kind == "dnf":
            out = np.zeros(shape, dtype=bool)
            for c in self.clauses:
                hit = np.ones(shape, dtype=bool)
                for j, a in c.literals:
                    hit &= lev[j] >= a
                out |= hit
            return out
        level = self.params["level"]
        if self.builtin == "dictator":
            return np.broadcast_to(lev[self.params["coord"]] >= level, shape).copy()
        if self.builtin in ("k_of_n", "majority"):
            count = np.zeros(shape, dtype=np.int16)
            for j in range(self.n):
                count += lev[j] >= level
            return count >= self.params["k"]
        out = np.zeros(shape, dtype=bool)
        w = self.params["block"]
        for b in range(self.params["blocks"]):
            hit = np.ones(shape, dtype=bool)
            for j in range(b * w, (b + 1) * w):
                hit &= lev[j] >= level
            out |= hit
        return out

    def float_table(self) -> np.ndarray:
        """:meth:`table` as float64, cached for repeated contractions."""
        if getattr(self, "_float_table", None) is None:
            self._float_table = self.table().astype(float)
            self._float_table.setflags(write=False)
        return self._float_table

    def bits(self) -> np.ndarray:
        """Truth table as a flat array in rank order."""
        return self.table().ravel(order="F")

    @property
    def is_constant(self) -> bool:
        """Exact for increasing events: compare the bottom and top configurations."""
        return self.evaluate((1,) * self.n) == self.evaluate((self.r,) * self.n)

    def to_clauses(self) -> list[MonotoneClause]:
        """Equivalent monotone DNF (minimal clauses for builtins)."""
        if self.kind == "dnf":
            return list(self.clauses)
        if self.kind == "table":
            return _minimal_clauses(self)
        p, level = self.params, self.params["level"]
        if self.builtin == "dictator":
            return [MonotoneClause(((p["coord"], level),))]
        if self.builtin in ("k_of_n", "majority"):
            if p["k"] > self.n:
                return []
            return [MonotoneClause(tuple((j, level) for j in combo))
                    for combo in itertools.combinations(range(self.n), p["k"])]
        w = p["block"]
        return [MonotoneClause(tuple((j, level) for j in range(b * w, (b + 1) * w)))
                for b in range(p["blocks"])]

    def relabel(self, perm: Sequence[int]) -> "IncreasingEvent":
        """Event ``{x : (x_perm^{-1}) in A}``: coordinate ``j`` is moved to ``perm[j]``."""
        perm = list(perm)
        if sorted(perm) != list(range(self.n)):
            raise InputError("perm must be a permutation of range(n)")
        clauses = [MonotoneClause(tuple((perm[j], a) for j, a in c.literals)) for c in self.to_clauses()]
        return IncreasingEvent.from_clauses(self.n, self.r, clauses)

    # serialisation

    def to_json(self) -> dict:
        doc = {"n": self.n, "r": self.r, "kind": self.kind}
        if self.kind == "dnf":
            doc["clauses"] = [[{"coord": j, "min_level": a} for j, a in c.literals] for c in self.clauses]
        elif self.kind == "table":
            doc["table"] = encode_bits(self.bits())
        else:
            params = {k: v for k, v in self.params.items() if not (self.builtin == "majority" and k == "k")}
            doc["builtin"] = {"name": self.builtin, "params": params}
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "IncreasingEvent":
        try:
            n, r, kind = int(doc["n"]), int(doc["r"]), doc["kind"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"event definition needs integer 'n', 'r' and a 'kind': {exc}") from None
        if kind == "dnf":
            try:
                clauses = [[(lit["coord"], lit["min_level"]) for lit in c] for c in doc["clauses"]]
            except (KeyError, TypeError) as exc:
                raise InputError(f"malformed 'clauses': {exc}") from None
            return cls.from_clauses(n, r, clauses)
        if kind == "table":
            if "table" not in doc:
                raise InputError("table event needs a base64 'table' field")
            return cls.from_table(n, r, decode_bits(doc["table"], r**n))
        if kind == "builtin":
            spec = doc.get("builtin") or {}
            name, params = spec.get("name"), dict(spec.get("params") or {})
            if name == "dictator":
                return cls(n, r, "builtin", builtin=name, params={"coord": 0, **params})
            return cls(n, r, "builtin", builtin=name, params=params)
        raise InputError(f"unknown event kind {kind!r}")

    def __repr__(self) -> str:
        if self.kind == "builtin":
            return f"IncreasingEvent(n={self.n}, r={self.r}, {self.builtin}{self.params})"
        return f"IncreasingEvent(n={self.n}, r={self.r}, kind={self.kind!r})"

    @cached_property
    def _monotone(self) -> bool:
        t = self.table().astype(np.int8)
        return all(bool(np.all(np.diff(t, axis=j) >= 0)) for j in range(self.n))


def _minimal_clauses(event: IncreasingEvent) -> list[MonotoneClause]:
    # minimal elements of the up-set; assumes the event is increasing
    tab = event.table()
    clauses = []
    for idx in zip(*np.nonzero(tab)):
        if all(k == 0 or not tab[idx[:j] + (k - 1,) + idx[j + 1:]] for j, k in enumerate(idx)):
            clauses.append(MonotoneClause(tuple((j, k + 1) for j, k in enumerate(idx) if k > 0)))
    return clauses


def encode_bits(bits: np.ndarray) -> str:
    """Base64 of the bitset packed little-endian within each byte (bit ``i`` = rank ``i``)."""
    return base64.b64encode(np.packbits(np.asarray(bits, dtype=bool), bitorder="little").tobytes()).decode("ascii")


def decode_bits(text: str, size: int) -> np.ndarray:
    try:
        raw = base64.b64decode(text, validate=True)
    except (ValueError, TypeError) as exc:
        raise InputError(f"table is not valid base64: {exc}") from None
    if len(raw) != math.ceil(size / 8):
        raise InputError(f"table holds {len(raw)} bytes, expected {math.ceil(size / 8)}")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:size].astype(bool)


def event_eval(event: IncreasingEvent, x: Sequence[int]) -> int:
    return int(event.evaluate(x))


def check_monotone(event: IncreasingEvent) -> bool:
    """True iff raising any single coordinate never turns the indicator off."""
    return event._monotone


def require_monotone(event: IncreasingEvent) -> None:
    if not check_monotone(event):
        raise MonotonicityError(f"{event!r} is not coordinate-wise increasing")
