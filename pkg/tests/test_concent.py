import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from qpart.concent import (
    MC_CHUNK,
    ProductSpace,
    chernoff_bound,
    check_self_bounding,
    fs_points,
    fs_sets,
    larger_root,
    lemma_lhs,
    mc_tail,
    median_mean_bound,
    median_mean_bound_qpart,
    median_mean_bound_xos,
    solve_t,
    solve_t_candidates,
    solve_t_min,
    solve_tau,
    solve_xi,
    solve_z,
    tail_bound_qpart,
    tail_bound_schechtman,
    tail_bound_selfbounding,
    verify_isoperimetric,
)
from qpart.setfn import additive, gen_threshold, gen_xos


def residual_t(t, alpha, q, s):
    return abs(t + alpha * q * t ** (-1 / (alpha * s)) - alpha * q - 1)


def test_solve_t_examples():
    assert solve_t(0.5, 4, 2) == pytest.approx(2, abs=1e-10)
    assert solve_t(1, 2, 1) == pytest.approx(2, abs=1e-10)
    with pytest.raises(ValueError):
        solve_t(0.2, 4, 2)
    with pytest.raises(ValueError):
        solve_t(1, 2, 2)


@given(st.integers(2, 30), st.data())
def test_solve_t_matches_brentq(q, data):
    s = data.draw(st.integers(1, q - 1))
    alpha = 1 / s + data.draw(st.floats(0.001, 3))
    t = solve_t(alpha, q, s)
    assert t > 1 and residual_t(t, alpha, q, s) <= 1e-10
    h = lambda x: x + alpha * q * x ** (-1 / (alpha * s)) - alpha * q - 1
    t0 = (q / s) ** (alpha * s / (alpha * s + 1))
    assert t == pytest.approx(brentq(h, t0, alpha * q + 1, xtol=1e-14), abs=1e-10)


def test_t_min_candidate_values():
    t0, t1 = solve_t_candidates(0.1, 5, 2)
    assert abs(t0 - 1.41) < 0.01 and abs(t1 - 1.38) < 0.01
    assert solve_t_min(0.1, 5, 2) == min(t0, t1)
    assert solve_t_min(0.7, 6, 2) == pytest.approx(solve_t(0.7, 6, 2), abs=1e-12)
    assert len(solve_t_candidates(0.3, 4, 1)) == 1


def test_tau():
    tau = solve_tau()
    assert 0.9 < tau < 1.0
    assert abs(math.exp(tau / 2) + math.exp(-tau) - 2) <= 1e-10


def test_xi_and_z():
    for delta in (0.1, 0.5, 1.0):
        assert solve_xi(1 + delta, delta) == pytest.approx(1 + delta, abs=1e-10)
    # psi = alpha r, 1 + delta = r / s
    alpha, r, s = 0.8, 6, 2
    assert solve_xi(alpha * r, r / s - 1) == pytest.approx(solve_t(alpha, r, s), abs=1e-10)
    assert solve_z(3, 1.0) == pytest.approx(solve_t(1.0, 3, 1), abs=1e-12)
    with pytest.raises(ValueError):
        larger_root(1, 0.5)


@given(st.integers(2, 6), st.data())
def test_lemma_property(q, data):
    s = data.draw(st.integers(1, q - 1))
    alpha = 1 / s + data.draw(st.floats(0, 2))
    xs = data.draw(st.lists(st.floats(0, 1), min_size=q, max_size=q))
    t = solve_t(alpha, q, s)
    assert lemma_lhs(xs, alpha, s, t) <= alpha * q + 1 + 1e-9
    x0 = t ** (-1 / (alpha * s))
    assert lemma_lhs([x0] * q, alpha, s, t) == pytest.approx(alpha * q + 1, abs=1e-8)


def test_fs_points_examples():
    assert fs_points([(1, 0), (1, 0)], (1, 0), 1) == 0
    assert fs_points([(0, 0, 0), (0, 1, 1)], (1, 1, 0), 1) == 1
    assert fs_points([(0, 0, 0), (0, 0, 0)], (1, 1, 1), 2) == 3


def fs_oracle(As, x, s):
    return min(fs_points(ys, x, s) for ys in product(*As))


@given(st.integers(1, 3), st.integers(2, 3), st.data())
def test_fs_sets_oracle(N, q, data):
    pts = list(product(range(2), repeat=N))
    As = [data.draw(st.lists(st.sampled_from(pts), min_size=1, max_size=4)) for _ in range(q)]
    x = data.draw(st.sampled_from(pts))
    s = data.draw(st.integers(1, q))
    val = fs_sets(As, x, s)
    assert val == fs_oracle(As, x, s)
    if all(x in A for A in As):
        assert val == 0
    bigger = [A + pts for A in As]
    assert fs_sets(bigger, x, s) <= val


def test_fs_budget():
    A = [(0,)] * 1001
    with pytest.raises(ValueError):
        fs_sets([A, A], (0,), 1)


def test_iso_examples():
    sp = ProductSpace.of([(0.5, 0.5), (0.5, 0.5)])
    full = sp.points()
    r = verify_isoperimetric(sp, [full, full], 1.0, 1)
    assert r.lhs == pytest.approx(1) and r.rhs == pytest.approx(1) and r.holds
    r = verify_isoperimetric(sp, [[(0, 0)], [(0, 0)]], 1.0, 1)
    assert r.rhs == pytest.approx(16) and r.lhs == pytest.approx(9 / 4) and r.holds


def iso_oracle(sp, As, alpha, s, base):
    # direct double loop; f^s by exhaustive tuples
    lhs = sum(sp.prob(x) * base ** fs_oracle(As, x, s) for x in sp.points())
    rhs = math.prod(sp.measure(A) ** (-alpha) for A in As)
    return lhs, rhs


@pytest.mark.parametrize("variant", ["t", "tmin", "z", "tau"])
def test_iso_against_oracle(variant):
    rng = np.random.default_rng(3)
    for _ in range(15):
        N = int(rng.integers(1, 4))
        sp = ProductSpace.of([(1 - p, p) for p in rng.uniform(0.1, 0.9, N)])
        pts = sp.points()
        q = int(rng.integers(2, 4))
        As = [[pts[i] for i in rng.choice(len(pts), int(rng.integers(1, len(pts) + 1)), replace=False)]
              for _ in range(q)]
        s = int(rng.integers(1, q))
        alpha = 1 / s + float(rng.uniform(0, 1)) if variant == "t" else float(rng.uniform(0.1, 2))
        r = verify_isoperimetric(sp, As, alpha, s, variant)
        s_eff = {"z": 1, "tau": q - 1}.get(variant, s)
        a_eff = 1 / q if variant == "tau" else alpha
        lhs, rhs = iso_oracle(sp, As, a_eff, s_eff, r.base)
        assert r.lhs == pytest.approx(lhs, rel=1e-12) and r.rhs == pytest.approx(rhs, rel=1e-12)
        assert r.holds


def test_tail_bound_examples():
    assert tail_bound_qpart(1.0, 3, 2, 1, 4, 1.0) == pytest.approx(0.5)
    r, s = 3, 2
    for k in (0, 1.5, 4):
        assert tail_bound_qpart(2.0, k, r, s, 8, 1 / s) == pytest.approx((r / s) ** -k * 2 ** (r / s))
    assert tail_bound_qpart(0.0, 0, 2, 1, 4, 1.0) >= 1
    with pytest.raises(ValueError):
        tail_bound_qpart(1.0, 1, 3, 1, 4, 1.0)
    assert tail_bound_schechtman(1.0, 0, 2) == 4
    assert tail_bound_schechtman(1.0, 3, 2) == 0.5
    assert tail_bound_schechtman(1.0, 5, 3) == pytest.approx(8 / 243)


def test_selfbounding_tail_examples():
    for side in ("upper", "lower"):
        assert tail_bound_selfbounding(3.0, 0, 6, 2, side) == 1
    assert tail_bound_selfbounding(8.0, 4, 5, 5, "lower") == pytest.approx(math.exp(-1))
    assert tail_bound_selfbounding(8.0, 4, 5, 5, "upper") == pytest.approx(math.exp(-16 / (2 * (8 + 4 / 3))))
    with pytest.raises(ValueError):
        tail_bound_selfbounding(1.0, 2, 5, 5, "lower")


def test_chernoff():
    assert chernoff_bound(0, 1) == 1
    assert chernoff_bound(1, 1e-9) == pytest.approx(1)
    assert chernoff_bound(1, math.e - 1) == pytest.approx(math.exp(-1))


def test_median_mean_bound():
    L = math.log(2)
    assert median_mean_bound(3, 1) == pytest.approx(6 + 1 / L + 4 * 2 ** (-1 / L) / L)
    const = [median_mean_bound(0, d) for d in np.linspace(0.05, 1, 40)]
    assert all(c > 0 for c in const)
    assert all(a > b for a, b in zip(const, const[1:]))
    assert median_mean_bound_qpart(2.0, 8) == median_mean_bound(2.0, 1 / 3)
    assert median_mean_bound_xos(4.0) == median_mean_bound(4.0, 0.5)


def test_self_bounding_examples():
    v = gen_xos(4, [[1, 0, 1, 1], [0, 1, 1, 0]])
    assert check_self_bounding(v, 1, 0)[0]
    m, q = 8, 4
    t = gen_threshold(m, Fraction(q, q - 1))
    assert check_self_bounding(t, math.ceil(m / q), 0)[0]
    for a in (Fraction(m, q) - 1, Fraction(m, q) - Fraction(1, 2)):
        ok, wit = check_self_bounding(t, a, 0)
        assert not ok and wit["S"] == t.full
    ok, wit = check_self_bounding(additive([2, 1]), 5, 0)
    assert not ok and "drop" in wit


def test_mc_examples():
    v = gen_threshold(6, Fraction(3, 2))
    assert np.all(mc_tail(v, 1.0, 1, 500).sample == 1.5)
    assert np.all(mc_tail(v, 0.0, 1, 500).sample == 0)
    w = additive([1, 2, 3, 4])
    n = 100_000
    res = mc_tail(w, 0.5, 9, n)
    sd = math.sqrt(sum(x * x / 4 for x in (1, 2, 3, 4)))
    assert abs(res.mean - 5) <= 4 * sd / math.sqrt(n)


def test_mc_determinism_and_threads():
    v = gen_threshold(5, Fraction(5, 4))
    n = 2 * MC_CHUNK + 17
    a = mc_tail(v, [0.3, 0.4, 0.5, 0.6, 0.7], 4, n)
    b = mc_tail(v, [0.3, 0.4, 0.5, 0.6, 0.7], 4, n, threads=3)
    assert np.array_equal(a.sample, b.sample) and a.n == n
    assert a.median == a.sample[(n - 1) // 2]
    assert a.survival(0) == 1.0
    assert a.survival(10) == 0.0
