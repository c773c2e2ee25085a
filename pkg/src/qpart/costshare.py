"""Cost allocation between cities: citycore, gamma-citycore and the greedy
harmonic price construction."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .classify import Partition, harmonic, price_lp
from .setfn import Valuation, is_subadditive, popcount


@dataclass
class PriceVector:
    prices: list
    feasible: bool
    total: Fraction
    deficit: Fraction | None = None  # LP optimum when infeasible

    def to_json(self) -> dict:
        return {
            "prices": [str(p) for p in self.prices],
            "total": str(self.total),
            "feasible": self.feasible,
        }


def coalition_violations(c: Valuation, part: Partition, prices, proper_only: bool = False) -> list:
    """Index masks T whose prices exceed c(union of T)."""
    k = part.k
    out = []
    for T in range(1, 1 << k):
        if proper_only and T == (1 << k) - 1:
            continue
        paid = sum((prices[j] for j in range(k) if T >> j & 1), Fraction(0))
        if paid > c.values[part.union(T)]:
            out.append(T)
    return out


def gamma_citycore_prices(c: Valuation, part: Partition, gamma) -> PriceVector:
    """Prices p >= 0 with every coalition paying at most its cost and
    gamma * c(S) <= sum p <= c(S), if any exist."""
    gamma = Fraction(gamma)
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    target = c.values[part.subset]
    res = price_lp(c, part)
    if res.value < gamma * target:
        return PriceVector([Fraction(0)] * part.k, False, res.value, deficit=res.value)
    prices = list(res.prices)
    if res.value > target:
        # uniform scaling keeps every coalition constraint
        prices = [p * target / res.value for p in prices]
    return PriceVector(prices, True, sum(prices, Fraction(0)))


def citycore_prices(c: Valuation, part: Partition) -> PriceVector:
    """A citycore vector (coalition constraints, sum p = c(S)) or the
    infeasibility certificate given by the price LP optimum."""
    return gamma_citycore_prices(c, part, 1)


def greedy_prices(g: Valuation, part: Partition, check: bool = True) -> PriceVector:
    """Harmonic greedy prices over q = part.k cities.

    Repeatedly picks the index set A minimising g(union A) / |A - C| among
    sets with at least one unpriced city, prices only the new cities
    A - C at g(union A) / (|A - C| H_{q-1}), and finally scales everything
    down if the total exceeds g(S). Ties go to the smallest |A - C|, then the
    smallest mask.
    """
    q = part.k
    if q < 2:
        raise ValueError("need at least two cities")
    if check and not is_subadditive(g):
        raise ValueError("greedy_prices requires a subadditive valuation")
    H = harmonic(q - 1)
    full = (1 << q) - 1
    unions = [g.values[part.union(T)] for T in range(1 << q)]
    prices = [Fraction(0)] * q
    C = 0
    while C != full:
        best = None
        for A in range(1, 1 << q):
            new = A & ~C
            if not new:
                continue
            n_new = popcount(new)
            key = (unions[A] / n_new, n_new, A)
            if best is None or key < best:
                best = key
        ratio, n_new, A = best
        for j in range(q):
            if (A & ~C) >> j & 1:
                prices[j] = ratio / H
        C |= A
    total = sum(prices, Fraction(0))
    target = g.values[part.subset]
    if total > target:
        prices = [p * target / total for p in prices]
        total = sum(prices, Fraction(0))
    return PriceVector(prices, True, total)
