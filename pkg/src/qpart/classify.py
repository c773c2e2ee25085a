"""Membership in the q-partitioning classes, partition level and closeness.

Every query reduces to one small LP per (S, partition of S into k blocks):
the cheapest fractional cover of the k block indices, each index set T
costing v(union of blocks in T). The cover LP has k rows and 2^k - 1
columns; its dual is the city price LP (k columns, 2^k - 1 rows).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .lpsolve import GE, LE, LinearProgram, solve
from .setfn import Valuation, is_subadditive, items_of, popcount

MAX_CLASSIFY_ITEMS = 8


@dataclass(frozen=True)
class Partition:
    subset: int
    blocks: tuple

    def __post_init__(self):
        union = 0
        for b in self.blocks:
            if b == 0:
                raise ValueError("blocks must be nonempty")
            if union & b:
                raise ValueError("blocks must be pairwise disjoint")
            union |= b
        if union != self.subset:
            raise ValueError("blocks must cover the subset exactly")

    @classmethod
    def of(cls, blocks: Sequence[int]) -> "Partition":
        S = 0
        for b in blocks:
            S |= b
        return cls(S, tuple(blocks))

    @property
    def k(self) -> int:
        return len(self.blocks)

    def union(self, T: int) -> int:
        """Union of the blocks whose indices are in the index mask ``T``."""
        u = 0
        for j, b in enumerate(self.blocks):
            if T >> j & 1:
                u |= b
        return u


@dataclass
class CoverLP:
    value: Fraction
    cover: dict = field(default_factory=dict)  # index mask T -> alpha(T)
    prices: list = field(default_factory=list)


@dataclass
class ClassificationWitness:
    S: int
    partition: Partition
    cover: dict
    lhs: Fraction
    rhs: Fraction

    def to_json(self) -> dict:
        return {
            "S": self.S,
            "blocks": list(self.partition.blocks),
            "cover": [{"T": T, "alpha": str(a)} for T, a in sorted(self.cover.items())],
            "lhs": str(self.lhs),
            "rhs": str(self.rhs),
        }


def _union_values(v: Valuation, part: Partition) -> list:
    # value of every index-set union, computed incrementally
    k = part.k
    unions = [0] * (1 << k)
    for T in range(1, 1 << k):
        low = T & -T
        unions[T] = unions[T ^ low] | part.blocks[low.bit_length() - 1]
    return [v.values[u] for u in unions]


def cover_lp(v: Valuation, part: Partition, prune: bool = True) -> CoverLP:
    """Cheapest fractional cover of the blocks (primal form), with the
    optimal city prices read off as the LP duals."""
    k = part.k
    vals = _union_values(v, part)
    cols = _useful_columns(vals, k) if prune else list(range(1, 1 << k))
    lp = LinearProgram(len(cols), [vals[T] for T in cols], sense="min")
    for j in range(k):
        lp.add([1 if T >> j & 1 else 0 for T in cols], GE, 1)
    res = solve(lp)
    cover = {T: a for T, a in zip(cols, res.solution) if a}
    return CoverLP(res.value, cover, list(res.duals))


def _useful_columns(vals: list, k: int) -> list:
    # A multi-block index set T can be dropped when its singletons or a
    # one-larger superset cover it at no greater cost; singletons always stay.
    cols = []
    full = (1 << k) - 1
    for T in range(1, 1 << k):
        if T & (T - 1):
            cost = vals[T]
            if sum(vals[1 << j] for j in range(k) if T >> j & 1) <= cost:
                continue
            rest = full & ~T
            if any(vals[T | 1 << j] <= cost for j in range(k) if rest >> j & 1):
                continue
        cols.append(T)
    return cols


def cover_lp_value(v: Valuation, part: Partition) -> Fraction:
    return cover_lp(v, part).value


def price_lp(v: Valuation, part: Partition) -> CoverLP:
    """City price LP (dual form): max sum p subject to every coalition of
    cities paying at most the value of its union."""
    k = part.k
    vals = _union_values(v, part)
    lp = LinearProgram(k, [1] * k, sense="max")
    for T in range(1, 1 << k):
        lp.add([T >> j & 1 for j in range(k)], LE, vals[T])
    res = solve(lp)
    cover = {T: a for T, a in zip(range(1, 1 << k), res.duals) if a}
    return CoverLP(res.value, cover, list(res.solution))


def enumerate_partitions(S: int, qmax: int, kmin: int = 2) -> Iterator[Partition]:
    """Set partitions of S into kmin..min(qmax, |S|) nonempty blocks, in
    restricted-growth-string order."""
    its = items_of(S)
    n = len(its)
    kmax = min(qmax, n)
    if n == 0 or kmin > kmax:
        return
    rgs = [0] * n

    def rec(pos: int, used: int):
        if pos == n:
            if used >= kmin:
                blocks = [0] * used
                for it, b in zip(its, rgs):
                    blocks[b] |= 1 << it
                yield Partition(S, tuple(blocks))
            return
        # prune when too few positions remain to open kmin blocks
        if used + (n - pos) < kmin:
            return
        for b in range(min(used + 1, kmax)):
            rgs[pos] = b
            yield from rec(pos + 1, max(used, b + 1))

    rgs[0] = 0
    yield from rec(1, 1)


def _check_size(v: Valuation) -> None:
    if v.m > MAX_CLASSIFY_ITEMS:
        raise ValueError(f"classification is capped at m={MAX_CLASSIFY_ITEMS}")


def _queries(v: Valuation, q: int, kmin: int = 2):
    for S in range(1, 1 << v.m):
        if popcount(S) < 2:
            continue
        yield from enumerate_partitions(S, q, kmin)


def find_violation(v: Valuation, q: int, kmin: int = 2) -> ClassificationWitness | None:
    """First (S, partition) whose cheapest cover undercuts v(S), if any."""
    _check_size(v)
    for part in _queries(v, q, kmin):
        rhs = v.values[part.subset]
        res = cover_lp(v, part)
        if res.value < rhs:
            return ClassificationWitness(part.subset, part, res.cover, res.value, rhs)
    return None


def is_q_partitioning(v: Valuation, q: int) -> tuple[bool, ClassificationWitness | None]:
    if not 2 <= q <= max(v.m, 2):
        raise ValueError(f"q={q} outside [2, m]")
    w = find_violation(v, q)
    return w is None, w


def partition_level(v: Valuation, linear: bool = False) -> int:
    """Largest q with v in Q(q, [m]); 1 when v is not subadditive.

    Binary search relies on the chain Q(m) ⊆ ... ⊆ Q(2); ``linear=True``
    walks q upward instead, for cross-checking.
    """
    _check_size(v)
    if v.m < 2:
        return 1
    if not is_subadditive(v):
        return 1
    if linear:
        level = 2
        for q in range(3, v.m + 1):
            if not is_q_partitioning(v, q)[0]:
                break
            level = q
        return level
    lo, hi = 2, v.m
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if is_q_partitioning(v, mid)[0]:
            lo = mid
        else:
            hi = mid - 1
    return lo


def closeness(v: Valuation, q: int) -> Fraction:
    """Largest gamma such that every cover over <= q blocks recovers at
    least gamma * v(S). Sets with v(S) = 0 are skipped."""
    _check_size(v)
    best = Fraction(1)
    for part in _queries(v, q):
        rhs = v.values[part.subset]
        if rhs <= 0:
            continue
        ratio = cover_lp_value(v, part) / rhs
        if ratio < best:
            best = ratio
    return best


def is_xos(v: Valuation) -> bool:
    """Direct XOS test: every S carries an additive clause w >= 0 on S with
    w(S) = v(S) and w(T) <= v(T) for T ⊆ S (singleton-block price LP)."""
    _check_size(v)
    for S in range(1, 1 << v.m):
        singles = tuple(1 << i for i in items_of(S))
        if len(singles) < 2:
            continue
        if price_lp(v, Partition(S, singles)).value < v.values[S]:
            return False
    return True


def harmonic(n: int) -> Fraction:
    return sum((Fraction(1, i) for i in range(1, n + 1)), Fraction(0))


@dataclass
class AuditReport:
    bound: Fraction
    gammas: list
    failures: list = field(default_factory=list)
    rejected: list = field(default_factory=list)

    @property
    def min_gamma(self) -> Fraction | None:
        return min(self.gammas) if self.gammas else None

    @property
    def ok(self) -> bool:
        return not self.failures and not self.rejected


def audit_smoothness(m: int, q: int, instances: Sequence[Valuation]) -> AuditReport:
    """Every instance of Q(q, [m]) must be (q-1)/q-close to Q(q+1, [m]).

    Instances outside Q(q, [m]) are listed in ``rejected`` by index.
    """
    if not 2 <= q < m:
        raise ValueError("need 2 <= q < m")
    bound = Fraction(q - 1, q)
    rep = AuditReport(bound, [])
    for idx, v in enumerate(instances):
        if v.m != m:
            raise ValueError(f"instance {idx} has m={v.m}, expected {m}")
        if not is_subadditive(v) or not is_q_partitioning(v, q)[0]:
            rep.rejected.append(idx)
            continue
        g = closeness(v, q + 1)
        rep.gammas.append(g)
        if g < bound:
            rep.failures.append(idx)
    return rep


def audit_closeness_to_subadditive(g: Valuation, q: int) -> AuditReport:
    """Subadditive g must be 1/H_{q-1}-close to Q(q, [m])."""
    bound = 1 / harmonic(q - 1)
    rep = AuditReport(bound, [])
    if not is_subadditive(g):
        rep.rejected.append(0)
        return rep
    gamma = closeness(g, q)
    rep.gammas.append(gamma)
    if gamma < bound:
        rep.failures.append(0)
    return rep
