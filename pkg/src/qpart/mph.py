"""Maximum-over-positive-hypergraph (MPH-k) representations.

A clause maps hyperedges (masks with at most k items) to nonnegative
weights; it evaluates a set by summing the weights of the hyperedges the set
contains. An MPH-k function is the max over its clauses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import ceil, comb

from .classify import Partition, price_lp
from .setfn import Valuation, items_of, mask_of, popcount


@dataclass
class PHClause:
    k: int
    weights: dict = field(default_factory=dict)  # mask E -> w(E)

    def __post_init__(self):
        for E, w in self.weights.items():
            if popcount(E) > self.k:
                raise ValueError(f"hyperedge {E:#b} larger than k={self.k}")
            if w < 0:
                raise ValueError("hyperedge weights must be nonnegative")

    def __call__(self, S: int) -> Fraction:
        return sum((w for E, w in self.weights.items() if E & S == E), Fraction(0))

    def to_json(self) -> list:
        return [{"E": E, "w": str(w)} for E, w in sorted(self.weights.items())]


@dataclass
class MPHRepresentation:
    k: int
    clauses: list = field(default_factory=list)

    def __post_init__(self):
        if any(c.k != self.k for c in self.clauses):
            raise ValueError("all clauses must share k")

    @property
    def max_edge(self) -> int:
        return max((popcount(E) for c in self.clauses for E in c.weights), default=0)

    def to_json(self) -> dict:
        return {"k": self.k, "clauses": [c.to_json() for c in self.clauses]}

    @classmethod
    def from_json(cls, data: dict) -> "MPHRepresentation":
        k = int(data["k"])
        clauses = [
            PHClause(k, {int(e["E"]): Fraction(e["w"]) for e in cl}) for cl in data["clauses"]
        ]
        return cls(k, clauses)


def eval_mph(rep: MPHRepresentation, S: int) -> Fraction:
    return max((c(S) for c in rep.clauses), default=Fraction(0))


def near_equal_blocks(S: int, q: int) -> list[int]:
    """Items of S in ascending order dealt round-robin into q blocks; empty
    blocks are dropped."""
    blocks = [0] * q
    for pos, i in enumerate(items_of(S)):
        blocks[pos % q] |= 1 << i
    return [b for b in blocks if b]


class NotPartitioning(ValueError):
    def __init__(self, S: int, partition: Partition, lp_value: Fraction, target: Fraction):
        super().__init__(
            f"price LP on S={S} reaches {lp_value} < v(S) = {target}; "
            "v is not q-partitioning"
        )
        self.S = S
        self.partition = partition
        self.lp_value = lp_value
        self.target = target


def mph_witness(v: Valuation, q: int) -> MPHRepresentation:
    """One clause per nonempty S: blocks of a near-equal split of S carry the
    city prices from the price LP, scaled to sum exactly to v(S)."""
    k = ceil(v.m / q)
    clauses = []
    for S in range(1, 1 << v.m):
        target = v.values[S]
        part = Partition.of(near_equal_blocks(S, q))
        if part.k == 1:
            clauses.append(PHClause(k, {S: target} if target else {}))
            continue
        res = price_lp(v, part)
        if res.value < target:
            raise NotPartitioning(S, part, res.value, target)
        scale = target / res.value if res.value else Fraction(0)
        weights = {b: p * scale for b, p in zip(part.blocks, res.prices) if p * scale}
        clauses.append(PHClause(k, weights))
    return MPHRepresentation(k, clauses)


def verify_mph(rep: MPHRepresentation, v: Valuation) -> tuple[bool, int | None]:
    """Pointwise equality of the representation and v; first mismatch."""
    for T in range(1 << v.m):
        if eval_mph(rep, T) != v.values[T]:
            return False, T
    return True, None


def binomial_floor_mph(m: int, k: int) -> MPHRepresentation:
    """Explicit MPH-k form of S -> max(C(|S|, k), C(m, k)/2).

    One clause puts weight 1 on every k-subset (it counts C(|S|, k)); the
    constant floor is carried by one single-edge clause per nonempty S whose
    edge is the first k items of S, or S itself when |S| < k.
    """
    floor = Fraction(comb(m, k), 2)
    clauses = [PHClause(k, {mask_of(c): Fraction(1) for c in combinations(range(m), k)})]
    seen = set()
    for S in range(1, 1 << m):
        E = mask_of(items_of(S)[:k])
        if E not in seen:
            seen.add(E)
            clauses.append(PHClause(k, {E: floor}))
    return MPHRepresentation(k, clauses)
