"""Concentration tools: root solvers for the isoperimetric bases, the
control-by-q-points distance f^s, exhaustive isoperimetric checks, tail and
median-mean bounds, self-bounding checks and seeded Monte Carlo tails.

Everything here is binary64 except :func:`check_self_bounding`, which works
on the exact valuation table.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from .setfn import Valuation, items_of

ROOT_TOL = 1e-12
MAX_ITER = 200
FS_BUDGET = 10**6
MC_CHUNK = 1 << 16


# ------------------------------------------------------------------ roots


def _bisect(h, lo: float, hi: float) -> float:
    # h(lo) < 0 < h(hi)
    for _ in range(MAX_ITER):
        mid = 0.5 * (lo + hi)
        if hi - lo <= ROOT_TOL:
            break
        if h(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def larger_root(A: float, c: float) -> float:
    """Root above 1 of t + A t^(-c) = A + 1, for A, c > 0 with A c > 1.

    t = 1 is always a root; the function is convex with its minimum at
    t0 = (A c)^(1/(c+1)) > 1, so the other root lies in [t0, A + 1].
    """
    if A <= 0 or c <= 0:
        raise ValueError("need A > 0 and c > 0")
    if A * c <= 1:
        raise ValueError("A * c must exceed 1 for a root above 1")
    t0 = (A * c) ** (1.0 / (c + 1.0))

    def h(t):
        return t + A * t ** (-c) - A - 1.0

    return _bisect(h, t0, A + 1.0)


def solve_t(alpha: float, q: int, s: int) -> float:
    """Larger root of t + alpha q t^(-1/(alpha s)) = alpha q + 1."""
    if not 1 <= s < q:
        raise ValueError("need 1 <= s < q")
    if alpha < 1.0 / s - 1e-15:
        raise ValueError(f"alpha={alpha} below 1/s; use solve_t_min")
    return larger_root(alpha * q, 1.0 / (alpha * s))


def solve_t_candidates(alpha: float, q: int, s: int) -> list[float]:
    """t_r for r = 0..s-1: larger root of t + alpha(q-r) t^(-1/(alpha(s-r))) = alpha(q-r) + 1."""
    if alpha <= 0 or not 1 <= s < q:
        raise ValueError("need alpha > 0 and 1 <= s < q")
    return [larger_root(alpha * (q - r), 1.0 / (alpha * (s - r))) for r in range(s)]


def solve_t_min(alpha: float, q: int, s: int) -> float:
    return min(solve_t_candidates(alpha, q, s))


def solve_z(q: int, alpha: float) -> float:
    """Larger root of z + q alpha z^(-1/alpha) = 1 + q alpha (the s = 1 base)."""
    return larger_root(q * alpha, 1.0 / alpha)


def solve_tau() -> float:
    """Positive root of e^(tau/2) + e^(-tau) = 2."""
    return _bisect(lambda x: math.exp(x / 2) + math.exp(-x) - 2.0, 0.5, 2.0)


def solve_xi(psi: float, delta: float) -> float:
    """Larger root of xi + psi xi^(-(1+delta)/psi) = psi + 1, psi >= 1 + delta > 1."""
    if delta <= 0 or psi < 1 + delta - 1e-15:
        raise ValueError("need psi >= 1 + delta > 1")
    return larger_root(psi, (1.0 + delta) / psi)


def lemma_lhs(xs: Sequence[float], alpha: float, s: int, t: float) -> float:
    """min(t, min over s-subsets of prod(x)^(-alpha)) + alpha sum(x), with 0^(-alpha) = inf."""
    top = sorted(xs, reverse=True)[:s]
    prod = math.prod(top)
    inner = math.inf if prod == 0 else prod ** (-alpha)
    return min(t, inner) + alpha * sum(xs)


# ------------------------------------------------------- product spaces, f^s


@dataclass(frozen=True)
class ProductSpace:
    """Coordinate i takes outcome j in range(len(probs[i])) with probs[i][j]."""

    probs: tuple

    def __post_init__(self):
        for p in self.probs:
            if any(x < 0 for x in p) or abs(sum(p) - 1.0) > 1e-12:
                raise ValueError("each coordinate needs a probability vector")

    @classmethod
    def of(cls, probs: Sequence[Sequence[float]]) -> "ProductSpace":
        return cls(tuple(tuple(float(x) for x in p) for p in probs))

    @property
    def N(self) -> int:
        return len(self.probs)

    def points(self) -> list[tuple]:
        return list(product(*(range(len(p)) for p in self.probs)))

    def prob(self, x: Sequence[int]) -> float:
        return math.prod(self.probs[i][xi] for i, xi in enumerate(x))

    def measure(self, A) -> float:
        return sum(self.prob(x) for x in set(map(tuple, A)))


def fs_points(ys: Sequence[Sequence[int]], x: Sequence[int], s: int) -> int:
    """Coordinates where x_i shows up fewer than s times among the y^j_i."""
    return sum(1 for i, xi in enumerate(x) if sum(1 for y in ys if y[i] == xi) < s)


def _fs_table(As: Sequence, X: np.ndarray, s: int) -> np.ndarray:
    # f^s(A_1..A_q; x) for every row x of X; brute force over tuples
    sizes = [len(A) for A in As]
    if math.prod(sizes) > FS_BUDGET:
        raise ValueError(f"tuple budget exceeded: {math.prod(sizes)} > {FS_BUDGET}")
    q = len(As)
    counts = None
    for i, A in enumerate(As):
        Y = np.asarray(A, dtype=np.int64)
        eq = (X[:, None, :] == Y[None, :, :]).astype(np.int16)  # (|X|, n_i, N)
        shape = [X.shape[0]] + [1] * q + [X.shape[1]]
        shape[1 + i] = Y.shape[0]
        eq = eq.reshape(shape)
        counts = eq if counts is None else counts + eq
    far = (counts < s).sum(axis=-1)
    return far.reshape(X.shape[0], -1).min(axis=1)


def fs_sets(As: Sequence, x: Sequence[int], s: int) -> int:
    """inf over y^i in A_i of f^s(y^1..y^q; x), exhaustive."""
    if any(len(A) == 0 for A in As):
        raise ValueError("sets must be nonempty")
    return int(_fs_table(As, np.asarray([x], dtype=np.int64), s)[0])


@dataclass
class IsoReport:
    lhs: float
    rhs: float
    holds: bool
    base: float


def verify_isoperimetric(
    sp: ProductSpace, As: Sequence, alpha: float, s: int, variant: str = "t", rtol: float = 1e-9
) -> IsoReport:
    """Compare E[base^f(x)] with prod P[A_i]^(-alpha), summing over all x.

    variant "t": base t(alpha, q, s), needs alpha >= 1/s.
    variant "tmin": base t_min(alpha, q, s), any alpha > 0.
    variant "z": s = 1, base z(q, alpha), any alpha > 0.
    variant "tau": s = q - 1, base e^(tau/q), alpha forced to 1/q.
    """
    q = len(As)
    if sp.N > 6 or any(len(p) > 4 for p in sp.probs):
        raise ValueError("exhaustive integration capped at 6 coordinates, 4 outcomes")
    if variant == "t":
        base = solve_t(alpha, q, s)
    elif variant == "tmin":
        base = solve_t_min(alpha, q, s)
    elif variant == "z":
        s = 1
        base = solve_z(q, alpha)
    elif variant == "tau":
        s = q - 1
        alpha = 1.0 / q
        base = math.exp(solve_tau() / q)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    pts = sp.points()
    X = np.asarray(pts, dtype=np.int64)
    f = _fs_table(As, X, s)
    probs = np.array([sp.prob(x) for x in pts])
    lhs = float(np.sum(probs * base ** f.astype(float)))
    masses = [sp.measure(A) for A in As]
    if any(pm <= 0 for pm in masses):
        raise ValueError("every A_i needs positive probability")
    rhs = float(math.prod(pm ** (-alpha) for pm in masses))
    return IsoReport(lhs, rhs, lhs <= rhs * (1 + rtol), base)


# ------------------------------------------------------------ tail bounds


def tail_bound_qpart(a: float, k: float, r: int, s: int, q: int, alpha: float, p_le_a: float = 0.5) -> float:
    """Bound on P[v(S) >= (r/s) a + k] for v in Q(q, [m]):
    t(alpha, r, s)^(-k) * P[v(S) <= a]^(-alpha r). The default
    P[v(S) <= a] = 1/2 is the median convention."""
    if a < 0 or k < 0:
        raise ValueError("need a >= 0 and k >= 0")
    if not 1 <= s < r or r > math.log2(q) + 1e-12:
        raise ValueError("need 1 <= s < r <= log2 q")
    t = solve_t(alpha, r, s)
    return t ** (-k) * p_le_a ** (-alpha * r)


def tail_bound_schechtman(a: float, k: float, q: int) -> float:
    """Bound q^(-k) 2^q on P[v(S) >= q a + k] for 1-Lipschitz subadditive v."""
    if q < 2:
        raise ValueError("need q >= 2")
    return float(q) ** (-k) * 2.0 ** q


def tail_bound_xos(a: float, k: float, psi: float, delta: float, p_le_a: float = 0.5) -> float:
    """Bound xi(psi, delta)^(-k) P[v(S) <= a]^(-psi) on P[v(S) >= (1+delta) a / beta + k]."""
    return solve_xi(psi, delta) ** (-k) * p_le_a ** (-psi)


def tail_bound_selfbounding(mean: float, t: float, m: int, q: int, side: str = "upper") -> float:
    a = math.ceil(m / q)
    c = (3 * a - 1) / 6
    if t < 0:
        raise ValueError("need t >= 0")
    if t == 0:
        return 1.0
    if side == "upper":
        return math.exp(-t * t / (2 * (a * mean + c * t)))
    if side == "lower":
        if t > mean:
            raise ValueError("lower tail needs t <= mean")
        return math.exp(-t * t / (2 * a * mean))
    raise ValueError(f"unknown side {side!r}")


def chernoff_bound(mu: float, delta: float) -> float:
    """(e^delta / (1+delta)^(1+delta))^mu."""
    if mu < 0 or delta <= 0:
        raise ValueError("need mu >= 0 and delta > 0")
    return math.exp(mu * (delta - (1 + delta) * math.log1p(delta)))


def median_mean_bound(med: float, delta: float) -> float:
    """(1+delta) med + k + 2^(1+delta) (1+delta)^(-k) / ln(1+delta) with
    k = 1 / ln(1+delta): the mean bound implied by a
    (1+delta)^(-k) 2^(1+delta) tail above (1+delta) med."""
    if not 0 < delta <= 1:
        raise ValueError("need 0 < delta <= 1")
    L = math.log1p(delta)
    k = 1.0 / L
    return (1 + delta) * med + k + 2 ** (1 + delta) * (1 + delta) ** (-k) / L


def median_mean_bound_qpart(med: float, q: int) -> float:
    return median_mean_bound(med, 1.0 / math.ceil(math.log2(q)))


def median_mean_bound_xos(med: float) -> float:
    if med < 1:
        raise ValueError("XOS instantiation needs med >= 1 so that delta <= 1")
    return median_mean_bound(med, 1.0 / math.sqrt(med))


# ------------------------------------------------------------ self-bounding


def check_self_bounding(v: Valuation, a, b) -> tuple[bool, dict | None]:
    """Exhaustive (a, b)-self-bounding check with f_i(x) = v(S - {i})."""
    a, b = Fraction(a), Fraction(b)
    vals = v.values
    for S in range(1 << v.m):
        vs = vals[S]
        total = Fraction(0)
        for i in items_of(S):
            d = vs - vals[S ^ (1 << i)]
            if d < 0 or d > 1:
                return False, {"S": S, "i": i, "drop": str(d)}
            total += d
        if total > a * vs + b:
            return False, {"S": S, "sum": str(total), "limit": str(a * vs + b)}
    return True, None


# ------------------------------------------------------------ Monte Carlo


@dataclass
class MCResult:
    sample: np.ndarray  # sorted
    median: float
    mean: float

    @property
    def n(self) -> int:
        return len(self.sample)

    def survival(self, x) -> np.ndarray | float:
        """Empirical P[v(S) >= x]."""
        idx = np.searchsorted(self.sample, x, side="left")
        return (self.n - idx) / self.n


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))


def mc_tail(v: Valuation, pi, seed: int, n: int, threads: int = 1) -> MCResult:
    """n draws of v(S), item i in S independently with probability pi[i].

    Draws come in fixed-size chunks, each from its own Philox stream keyed by
    (seed, chunk index), so results do not depend on ``threads``.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    pi = np.broadcast_to(np.asarray(pi, dtype=float), (v.m,))
    if np.any(pi < 0) or np.any(pi > 1):
        raise ValueError("marginals must lie in [0, 1]")
    table = v.as_floats()
    weights = 1 << np.arange(v.m, dtype=np.int64)
    n_chunks = -(-n // MC_CHUNK)

    def draw(c: int) -> np.ndarray:
        size = min(MC_CHUNK, n - c * MC_CHUNK)
        bits = _chunk_rng(seed, c).random((size, v.m)) < pi
        return table[bits.astype(np.int64) @ weights]

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(draw, range(n_chunks)))
    else:
        parts = [draw(c) for c in range(n_chunks)]
    sample = np.sort(np.concatenate(parts))
    return MCResult(sample, float(sample[(n - 1) // 2]), float(sample.mean()))
