"""Capped-distribution quantities f(p), g(p) and the sequential posted-price
mechanism.

Delta(p) is the set of distributions over subsets of [m] in which every item
appears with probability at most p. f(p) is the best expected value over
Delta(p); g(p) is the max over lambda in Delta(p) of the min over mu in
Delta(p) of E v(S - T).
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from typing import Sequence

import numpy as np
from gmpy2 import mpq
from scipy.optimize import linprog

from .classify import is_q_partitioning
from .lpsolve import GE, LinearProgram, solve
from .setfn import Valuation, items_of, popcount, submasks

MAX_MINIMAX_ITEMS = 4
TOL = 1e-9


def _check_m(v: Valuation) -> None:
    if v.m > MAX_MINIMAX_ITEMS:
        raise ValueError(f"minimax LPs are capped at m={MAX_MINIMAX_ITEMS}")


def _membership(m: int) -> np.ndarray:
    # (m, 2^m) incidence: row i marks the sets containing item i
    masks = np.arange(1 << m)
    return np.array([(masks >> i) & 1 for i in range(m)], dtype=float)


@dataclass
class CappedDistribution:
    probs: np.ndarray  # indexed by mask
    cap: float

    def marginals(self) -> np.ndarray:
        m = int(np.log2(len(self.probs)))
        return _membership(m) @ self.probs

    def in_delta(self, tol: float = TOL) -> bool:
        return bool(
            np.all(self.probs >= -tol)
            and abs(self.probs.sum() - 1) <= tol
            and np.all(self.marginals() <= self.cap + tol)
        )


def f_value(v: Valuation, p: float) -> tuple[float, CappedDistribution]:
    """max over lambda in Delta(p) of E v(S), with a maximiser."""
    _check_m(v)
    if not 0 <= p <= 1:
        raise ValueError("cap p must lie in [0, 1]")
    n = 1 << v.m
    vals = v.as_floats()
    res = linprog(
        -vals,
        A_ub=_membership(v.m),
        b_ub=np.full(v.m, p),
        A_eq=np.ones((1, n)),
        b_eq=[1.0],
        bounds=[(0, None)] * n,
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"f LP failed: {res.message}")
    return float(-res.fun), CappedDistribution(np.clip(res.x, 0, None), p)


def removal_matrix(v: Valuation) -> np.ndarray:
    """M[S, T] = v(S - T)."""
    n = 1 << v.m
    vals = v.as_floats()
    S = np.arange(n)[:, None]
    T = np.arange(n)[None, :]
    return vals[S & ~T]


def g_value(v: Valuation, p: float) -> tuple[float, CappedDistribution]:
    """max-min of E v(S - T) over lambda, mu in Delta(p).

    The inner min over mu is replaced by its LP dual
    (max y - p sum z subject to y - sum_{i in T} z_i <= E_lambda v(S - T)),
    which merges with the outer max into one LP over (lambda, y, z).
    """
    _check_m(v)
    if not 0 <= p <= 1:
        raise ValueError("cap p must lie in [0, 1]")
    m, n = v.m, 1 << v.m
    M = removal_matrix(v)
    inc = _membership(m)
    # variables: lambda (n), y (1, free), z (m)
    c = np.concatenate([np.zeros(n), [-1.0], np.full(m, p)])
    A_ub = np.zeros((n + m, n + 1 + m))
    b_ub = np.zeros(n + m)
    A_ub[:n, :n] = -M.T  # y - z(T) - sum_S lambda_S M[S, T] <= 0
    A_ub[:n, n] = 1.0
    A_ub[:n, n + 1 :] = -inc.T
    A_ub[n:, :n] = inc  # item caps on lambda
    b_ub[n:] = p
    A_eq = np.zeros((1, n + 1 + m))
    A_eq[0, :n] = 1.0
    bounds = [(0, None)] * n + [(None, None)] + [(0, None)] * m
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"g LP failed: {res.message}")
    return float(-res.fun), CappedDistribution(np.clip(res.x[:n], 0, None), p)


# ------------------------------------------------------------ exact oracle


def _solve_square(A: list, b: list) -> list | None:
    # Gauss-Jordan over exact rationals; None when singular
    n = len(A)
    M = [list(row) + [bi] for row, bi in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        M[col] = [x / pv for x in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * c for a, c in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


@lru_cache(maxsize=256)
def delta_vertices(m: int, p: Fraction) -> list[tuple]:
    """Vertices of Delta(p) by brute force over active constraint sets."""
    p = Fraction(p)
    pq = mpq(p.numerator, p.denominator)
    n = 1 << m
    ineqs = []  # (row, rhs) meaning row . lam <= rhs
    for i in range(m):
        ineqs.append(([mpq((S >> i) & 1) for S in range(n)], pq))
    for S in range(n):
        ineqs.append(([mpq(-1 if T == S else 0) for T in range(n)], mpq(0)))
    ones = [mpq(1)] * n
    verts = set()
    for active in combinations(range(len(ineqs)), n - 1):
        A = [ones] + [ineqs[j][0] for j in active]
        b = [mpq(1)] + [ineqs[j][1] for j in active]
        lam = _solve_square(A, b)
        if lam is None:
            continue
        if all(sum(a * x for a, x in zip(row, lam)) <= rhs for row, rhs in ineqs):
            verts.add(tuple(Fraction(int(x.numerator), int(x.denominator)) for x in lam))
    return sorted(verts)


def g_value_vertex_oracle(v: Valuation, p) -> Fraction:
    """Exact g(p) for rational p: enumerate the vertices of Delta(p) for both
    players and solve the resulting matrix game with the exact simplex."""
    if v.m > 3:
        raise ValueError("vertex oracle is capped at m=3")
    verts = delta_vertices(v.m, Fraction(p))
    n = 1 << v.m
    M = [[v.values[S & ~T] for T in range(n)] for S in range(n)]
    pay = [
        [sum((lam[S] * mu[T] * M[S][T] for S in range(n) if lam[S] for T in range(n) if mu[T]), Fraction(0))
         for mu in verts]
        for lam in verts
    ]
    k = len(verts)
    # max w s.t. sum_a x_a pay[a][b] >= w for all b, sum x = 1; payoffs are >= 0 so w >= 0
    lp = LinearProgram(k + 1, [0] * k + [1], sense="max")
    for b in range(k):
        lp.add([pay[a][b] for a in range(k)] + [-1], GE, 0)
    lp.add([1] * k + [0], "==", 1)
    return solve(lp).value


# ------------------------------------------------------------ minimax step


@dataclass
class MinimaxReport:
    p: float
    q: int
    r: int
    g: float
    f_p: float
    f_shrunk: float
    holds: bool
    chernoff: float
    chernoff_ok: bool
    telescoping_terms: list = field(default_factory=list)
    telescoping_sum: float = 0.0
    telescoping_bound: float = 0.0
    telescoping_ok: bool = True

    def to_json(self) -> dict:
        return dict(self.__dict__)


def verify_minimax_step(v: Valuation, p: float, q: int, check_class: bool = True) -> MinimaxReport:
    """Check g(p) >= (f(p) - f(p^(r/2))) / 8 for q = 2^r and p <= 1/16,
    together with the Chernoff estimate (8ep/7)^(7r/8) <= p^(r/2) and the
    telescoping sum over the caps 16^(-(r/2)^i)."""
    _check_m(v)
    r = int(round(math.log2(q)))
    if q < 2 or 1 << r != q:
        raise ValueError("q must be a power of two")
    if not 0 < p <= 1 / 16:
        raise ValueError("need 0 < p <= 1/16")
    if check_class and not is_q_partitioning(v, min(q, v.m))[0]:
        raise ValueError(f"valuation is not {q}-partitioning")
    g, _ = g_value(v, p)
    f_p, _ = f_value(v, p)
    f_shrunk, _ = f_value(v, p ** (r / 2))
    holds = g >= (f_p - f_shrunk) / 8 - TOL
    cher = (8 * math.e * p / 7) ** (7 * r / 8)
    # with r/2 <= 1 the caps do not shrink and a single term is used
    m = v.m
    if r > 2 and math.log(m * m, 16) > 1:
        s = math.ceil(math.log(math.log(m * m, 16), r / 2))
    else:
        s = 1
    terms = [g_value(v, 16.0 ** (-((r / 2) ** i)))[0] for i in range(s)]
    bound = (1 / 16 - 1 / m) * float(v.values[v.full]) / 8
    return MinimaxReport(
        p, q, r, g, f_p, f_shrunk, bool(holds), cher, cher <= p ** (r / 2) + 1e-15,
        terms, float(sum(terms)), bound, bool(sum(terms) >= bound - TOL),
    )


# ------------------------------------------------------------ mechanism


@dataclass
class MarketInstance:
    buyers: list
    prices: list
    order: list | None = None

    def __post_init__(self):
        self.prices = [Fraction(x) for x in self.prices]
        if any(x < 0 for x in self.prices):
            raise ValueError("prices must be nonnegative")
        ms = {b.m for b in self.buyers}
        if len(ms) > 1 or (ms and ms.pop() != len(self.prices)):
            raise ValueError("every buyer and the price vector must share m")
        if self.order is None:
            self.order = list(range(len(self.buyers)))
        if sorted(self.order) != list(range(len(self.buyers))):
            raise ValueError("order must be a permutation of the buyers")

    @property
    def m(self) -> int:
        return len(self.prices)


@dataclass
class MechanismOutcome:
    allocation: list  # bundle mask per buyer (buyer index order)
    welfare: Fraction
    revenue: Fraction
    utilities: list


def demand(v: Valuation, prices: Sequence[Fraction], available: int) -> int:
    """Utility-maximising bundle among available items; ties go to the
    smaller bundle, then the smaller mask."""
    best = None
    for S in submasks(available):
        u = v.values[S] - sum((prices[i] for i in items_of(S)), Fraction(0))
        key = (-u, popcount(S), S)
        if best is None or key < best:
            best = key
    return best[2]


def simulate_mechanism(inst: MarketInstance) -> MechanismOutcome:
    available = (1 << inst.m) - 1
    alloc = [0] * len(inst.buyers)
    for i in inst.order:
        S = demand(inst.buyers[i], inst.prices, available)
        alloc[i] = S
        available &= ~S
    values = [b.values[S] for b, S in zip(inst.buyers, alloc)]
    paid = [sum((inst.prices[j] for j in items_of(S)), Fraction(0)) for S in alloc]
    welfare = sum(values, Fraction(0))
    revenue = sum(paid, Fraction(0))
    return MechanismOutcome(alloc, welfare, revenue, [x - y for x, y in zip(values, paid)])


def brute_opt_welfare(buyers: Sequence[Valuation]) -> tuple[list, Fraction]:
    """Welfare-maximising allocation by DP over (buyer, remaining items)."""
    if not buyers:
        return [], Fraction(0)
    m = buyers[0].m
    n = len(buyers)
    full = (1 << m) - 1
    # best[i][R]: max welfare of buyers i.. using items in R
    best = [[Fraction(0)] * (1 << m) for _ in range(n + 1)]
    choice = [[0] * (1 << m) for _ in range(n)]
    for i in range(n - 1, -1, -1):
        vals = buyers[i].values
        nxt = best[i + 1]
        for R in range(1 << m):
            b, c = None, 0
            for S in submasks(R):
                w = vals[S] + nxt[R & ~S]
                if b is None or w > b:
                    b, c = w, S
            best[i][R] = b
            choice[i][R] = c
    alloc, R = [], full
    for i in range(n):
        alloc.append(choice[i][R])
        R &= ~choice[i][R]
    return alloc, best[0][full]


def worst_order_welfare(buyers: Sequence[Valuation], prices) -> tuple[list, Fraction]:
    """Minimum mechanism welfare over every arrival order (n <= 6)."""
    if len(buyers) > 6:
        raise ValueError("order enumeration is capped at 6 buyers")
    worst = None
    for order in permutations(range(len(buyers))):
        w = simulate_mechanism(MarketInstance(list(buyers), prices, list(order))).welfare
        if worst is None or w < worst[1]:
            worst = (list(order), w)
    return worst
