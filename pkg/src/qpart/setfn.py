"""Explicit set functions over [m] stored as exact rational tables.

Bit ``i`` of a mask stands for item ``i + 1`` (little-endian). ``values[S]``
is the value of the set whose characteristic mask is ``S``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

import numpy as np

MAX_ITEMS = 20
MAX_AXIOM_ITEMS = 12


def popcount(x: int) -> int:
    return bin(x).count("1")


def items_of(mask: int) -> list[int]:
    """Zero-based item indices contained in ``mask``."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def mask_of(items: Iterable[int]) -> int:
    """Mask from zero-based item indices."""
    m = 0
    for i in items:
        m |= 1 << i
    return m


def submasks(mask: int):
    """All submasks of ``mask``, including 0 and ``mask`` itself."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


@dataclass(frozen=True)
class Valuation:
    m: int
    values: tuple

    def __post_init__(self):
        if not 1 <= self.m <= MAX_ITEMS:
            raise ValueError(f"m={self.m} outside [1, {MAX_ITEMS}]")
        if len(self.values) != 1 << self.m:
            raise ValueError(f"expected {1 << self.m} values, got {len(self.values)}")

    @classmethod
    def from_values(cls, m: int, values: Sequence) -> "Valuation":
        return cls(m, tuple(Fraction(x) for x in values))

    @classmethod
    def from_function(cls, m: int, fn) -> "Valuation":
        return cls(m, tuple(Fraction(fn(S)) for S in range(1 << m)))

    @property
    def full(self) -> int:
        return (1 << self.m) - 1

    def __call__(self, S: int) -> Fraction:
        return evaluate(self, S)

    def scaled(self, c) -> "Valuation":
        c = Fraction(c)
        return Valuation(self.m, tuple(c * x for x in self.values))

    def as_floats(self) -> np.ndarray:
        return np.array([float(x) for x in self.values])


def evaluate(v: Valuation, S: int) -> Fraction:
    if not 0 <= S < (1 << v.m):
        raise IndexError(f"mask {S} out of range for m={v.m}")
    return v.values[S]


@dataclass
class AxiomReport:
    normalized: bool
    monotone: bool
    subadditive: bool
    lipschitz: bool
    counterexample: dict | None = None

    @property
    def ok(self) -> bool:
        return self.normalized and self.monotone and self.subadditive


def check_axioms(v: Valuation) -> AxiomReport:
    """Exhaustive check of normalization, monotonicity, subadditivity and
    unit-bounded marginals (lipschitz). The first failing axiom, in that
    order, is reported with a witness."""
    if v.m > MAX_AXIOM_ITEMS:
        raise ValueError(f"exhaustive axiom check capped at m={MAX_AXIOM_ITEMS}")
    vals = v.values
    normalized = vals[0] == 0
    mono_w = lip_w = None
    for S in range(1 << v.m):
        for i in range(v.m):
            if S >> i & 1:
                continue
            d = vals[S | (1 << i)] - vals[S]
            if d < 0 and mono_w is None:
                mono_w = {"S": S, "T": S | (1 << i)}
            if (d < 0 or d > 1) and lip_w is None:
                lip_w = {"S": S, "i": i}
    sub_w = _subadditive_witness(v, monotone=mono_w is None)

    witness = None
    if not normalized:
        witness = {"axiom": "normalized", "S": 0}
    elif mono_w is not None:
        witness = {"axiom": "monotone", **mono_w}
    elif sub_w is not None:
        witness = {"axiom": "subadditive", "S": sub_w[0], "T": sub_w[1]}
    elif lip_w is not None:
        witness = {"axiom": "lipschitz", **lip_w}
    return AxiomReport(normalized, mono_w is None, sub_w is None, lip_w is None, witness)


def _subadditive_witness(v: Valuation, monotone: bool = True):
    vals = v.values
    full = v.full
    # for monotone v, disjoint pairs are enough
    for S in range(1, 1 << v.m):
        vs = vals[S]
        for T in submasks(full & ~S):
            if T > S and vals[S | T] > vs + vals[T]:
                return S, T
    if not monotone:
        for S in range(1, 1 << v.m):
            for T in range(S + 1, 1 << v.m):
                if S & T and vals[S | T] > vals[S] + vals[T]:
                    return S, T
    return None


def is_subadditive(v: Valuation) -> bool:
    return _subadditive_witness(v, is_monotone(v)) is None


def is_monotone(v: Valuation) -> bool:
    vals = v.values
    return all(
        vals[S | (1 << i)] >= vals[S]
        for S in range(1 << v.m)
        for i in range(v.m)
        if not S >> i & 1
    )


# ---------------------------------------------------------------- generators


def gen_threshold(m: int, top) -> Valuation:
    """0 on the empty set, 1 on proper nonempty subsets, ``top`` on [m]."""
    top = Fraction(top)
    if m < 2:
        raise ValueError("gen_threshold needs m >= 2")
    if not 1 <= top <= 2:
        raise ValueError("top must lie in [1, 2]")
    full = (1 << m) - 1
    return Valuation.from_function(m, lambda S: 0 if S == 0 else (top if S == full else 1))


def setcover_sets(a: int) -> list[int]:
    """Covering sets S_v = {u : v.u odd} over the nonzero vectors of F_2^a.

    Vector u (an integer in 1..2^a-1) is item u-1.
    """
    out = []
    for vec in range(1, 1 << a):
        out.append(mask_of(u - 1 for u in range(1, 1 << a) if popcount(vec & u) % 2))
    return out


def gen_setcover_f2(a: int) -> Valuation:
    """Minimum set-cover function over the F_2^a parity sets (m = 2^a - 1)."""
    if not 2 <= a <= 4:
        raise ValueError("a must lie in [2, 4]")
    m = (1 << a) - 1
    sets = setcover_sets(a)
    inf = m + 1
    best = [inf] * (1 << m)
    # every T is covered by at most a sets (the unit vectors), so unions of
    # up to a covering sets are enough
    for k in range(1, a + 1):
        for combo in combinations(sets, k):
            u = 0
            for s in combo:
                u |= s
            if best[u] > k:
                best[u] = k
    # push minima down to every subset of each reachable union
    for i in range(m):
        bit = 1 << i
        for S in range(1 << m):
            if S & bit and best[S] < best[S ^ bit]:
                best[S ^ bit] = best[S]
    best[0] = 0
    return Valuation(m, tuple(Fraction(b) for b in best))


def gen_xos(m: int, clauses: Sequence[Sequence]) -> Valuation:
    """Max of additive clauses; each clause is a length-m weight vector."""
    cl = [[Fraction(w) for w in c] for c in clauses]
    for c in cl:
        if len(c) != m:
            raise ValueError("clause length must equal m")
        if any(w < 0 for w in c):
            raise ValueError("clause weights must be nonnegative")
    vals = []
    for S in range(1 << m):
        its = items_of(S)
        vals.append(max((sum((c[i] for i in its), Fraction(0)) for c in cl), default=Fraction(0)))
    return Valuation(m, tuple(vals))


def gen_binomial_floor(m: int, k: int) -> Valuation:
    """v(S) = max(C(|S|, k), C(m, k)/2) on nonempty S; v(empty) = 0."""
    if not 1 <= k <= m:
        raise ValueError("need 1 <= k <= m")
    floor = Fraction(comb(m, k), 2)
    return Valuation.from_function(
        m, lambda S: 0 if S == 0 else max(Fraction(comb(popcount(S), k)), floor)
    )


def gen_random_subadditive(m: int, seed: int, clauses: int = 3, denom: int = 4) -> Valuation:
    """Random monotone draw (max of additive clauses plus per-set noise),
    upward monotone repair, then :func:`subadditive_closure`."""
    if m > MAX_AXIOM_ITEMS:
        raise ValueError(f"m capped at {MAX_AXIOM_ITEMS}")
    rng = np.random.default_rng(seed)
    w = rng.integers(0, denom + 1, size=(clauses, m))
    noise = rng.integers(0, 2 * denom + 1, size=1 << m)
    raw = []
    for S in range(1 << m):
        its = items_of(S)
        base = max(int(w[c, its].sum()) for c in range(clauses)) if its else 0
        raw.append(Fraction(base + int(noise[S]), denom) if S else Fraction(0))
    raw = monotone_repair(raw, m)
    return subadditive_closure(Valuation(m, tuple(raw)))


def monotone_repair(vals: list, m: int) -> list:
    """Upward sweep: v(S) <- max(v(S), v(S - i)) in increasing mask order."""
    out = list(vals)
    for S in range(1, 1 << m):
        for i in items_of(S):
            prev = out[S ^ (1 << i)]
            if prev > out[S]:
                out[S] = prev
    return out


def subadditive_closure(v: Valuation) -> Valuation:
    """Largest subadditive function below v, via a DP over 2-splits."""
    vals = list(v.values)
    for S in range(1, 1 << v.m):
        low = S & -S
        best = vals[S]
        # splits T | S\T with T containing the lowest item avoid double work
        for sub in submasks(S ^ low):
            T = sub | low
            if T != S:
                c = vals[T] + vals[S ^ T]
                if c < best:
                    best = c
        vals[S] = best
    return Valuation(v.m, tuple(vals))


def additive(weights: Sequence) -> Valuation:
    return gen_xos(len(weights), [weights])
