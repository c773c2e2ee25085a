from fractions import Fraction
from itertools import permutations, product

import numpy as np
import pytest

from qpart.posted import (
    MarketInstance,
    brute_opt_welfare,
    delta_vertices,
    demand,
    f_value,
    g_value,
    g_value_vertex_oracle,
    removal_matrix,
    simulate_mechanism,
    verify_minimax_step,
    worst_order_welfare,
)
from qpart.setfn import additive, gen_random_subadditive, gen_threshold, gen_xos
from qpart.suites import random_xos

from oracles import naive_run


def test_f_examples():
    v = gen_threshold(3, Fraction(3, 2))
    assert f_value(v, 1)[0] == pytest.approx(1.5)
    val, lam = f_value(v, 1 / 16)
    assert val >= 1.5 / 16 - 1e-12 and lam.in_delta()
    assert f_value(v, 1 / 9)[0] <= 1.5 / 3 + 1e-9
    with pytest.raises(ValueError):
        f_value(v, 1.5)
    with pytest.raises(ValueError):
        f_value(gen_threshold(5, 1), 0.5)


def test_g_endpoints_and_additive():
    v = additive([1, 1])
    assert g_value(v, 0)[0] == pytest.approx(0, abs=1e-12)
    assert g_value(v, 1)[0] == pytest.approx(0, abs=1e-12)
    assert g_value(v, 0.5)[0] == pytest.approx(float(g_value_vertex_oracle(v, Fraction(1, 2))), abs=1e-9)


def test_removal_matrix():
    v = additive([1, 2])
    M = removal_matrix(v)
    assert M[3, 1] == 2 and M[3, 3] == 0 and M[1, 2] == 1


def test_delta_vertices_m1():
    assert delta_vertices(1, Fraction(1, 3)) == [(Fraction(2, 3), Fraction(1, 3)), (Fraction(1), Fraction(0))]


@pytest.mark.parametrize("seed", range(4))
def test_g_against_vertex_oracle(seed):
    rng = np.random.default_rng(seed)
    v = random_xos(3, rng) if seed % 2 else gen_random_subadditive(3, seed)
    for p in (Fraction(1, 7), Fraction(2, 5), Fraction(3, 4)):
        assert g_value(v, float(p))[0] == pytest.approx(float(g_value_vertex_oracle(v, p)), abs=1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_g_le_f_and_f_monotone(seed):
    v = gen_random_subadditive(4, seed)
    ps = np.linspace(0, 1, 11)
    fs = [f_value(v, p)[0] for p in ps]
    gs = [g_value(v, p)[0] for p in ps]
    assert all(g <= f + 1e-9 for g, f in zip(gs, fs))
    assert all(a <= b + 1e-9 for a, b in zip(fs, fs[1:]))
    assert all(g_value(v, p)[1].in_delta() for p in ps)


def test_minimax_step():
    v = gen_xos(3, [[1, 0, 1], [0, 1, 1]])
    r = verify_minimax_step(v, 1 / 16, 4)
    assert r.holds and r.chernoff_ok and r.f_shrunk <= r.f_p + 1e-12
    with pytest.raises(ValueError):
        verify_minimax_step(v, 1 / 16, 3)
    with pytest.raises(ValueError):
        verify_minimax_step(v, 0.2, 4)
    with pytest.raises(ValueError):
        verify_minimax_step(gen_threshold(4, 2), 1 / 16, 4)


def test_mechanism_examples():
    v = gen_threshold(3, Fraction(3, 2))
    out = simulate_mechanism(MarketInstance([v], [0, 0, 0]))
    assert out.welfare == Fraction(3, 2)
    out = simulate_mechanism(MarketInstance([v], [2, 2, 2]))
    assert out.welfare == 0 and out.allocation == [0]
    a, b = additive([3]), additive([5])
    out = simulate_mechanism(MarketInstance([a, b], [2], [0, 1]))
    assert out.allocation == [1, 0] and out.revenue == 2
    out = simulate_mechanism(MarketInstance([a, b], [4], [0, 1]))
    assert out.allocation == [0, 1]


def test_demand_tie_break():
    v = additive([1, 1])
    # zero utility everywhere: the empty bundle wins
    assert demand(v, [Fraction(1), Fraction(1)], 3) == 0


def test_market_validation():
    with pytest.raises(ValueError):
        MarketInstance([additive([1])], [-1])
    with pytest.raises(ValueError):
        MarketInstance([additive([1])], [1, 1])
    with pytest.raises(ValueError):
        MarketInstance([additive([1])], [1], [1])


def brute_opt(buyers):
    m = buyers[0].m
    best = Fraction(0)
    for owner in product(range(len(buyers) + 1), repeat=m):
        bundles = [0] * (len(buyers) + 1)
        for item, o in enumerate(owner):
            bundles[o] |= 1 << item
        best = max(best, sum(b.values[S] for b, S in zip(buyers, bundles)))
    return best


@pytest.mark.parametrize("seed", range(5))
def test_opt_welfare_oracle(seed):
    rng = np.random.default_rng(seed)
    buyers = [random_xos(4, rng) for _ in range(2)] + [gen_random_subadditive(4, seed)]
    alloc, val = brute_opt_welfare(buyers)
    assert val == brute_opt(buyers)
    assert sum(b.values[S] for b, S in zip(buyers, alloc)) == val
    assert brute_opt_welfare(buyers[:1])[1] == buyers[0].values[-1]


def test_identical_buyers():
    b = additive([1, 2, 3])
    assert brute_opt_welfare([b, b])[1] == 6
    prices = [Fraction(1, 2)] * 3
    assert len({simulate_mechanism(MarketInstance([b, b, b], prices, list(o))).welfare
                for o in permutations(range(3))}) == 1


def test_worst_order_crafted():
    # the buyer who comes first takes the pair; the other wants one item
    greedy = gen_xos(2, [[1, 1]])
    picky = gen_xos(2, [[5, 0]])
    prices = [Fraction(1, 2), Fraction(1, 2)]
    order, w = worst_order_welfare([greedy, picky], prices)
    assert order == [0, 1] and w == 2
    assert naive_run([greedy, picky], prices, [1, 0]) == 6


@pytest.mark.parametrize("seed", range(5))
def test_worst_order_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    buyers = [random_xos(3, rng) for _ in range(n)]
    prices = [Fraction(int(x), 4) for x in rng.integers(0, 5, 3)]
    _, w = worst_order_welfare(buyers, prices)
    assert w == min(naive_run(buyers, prices, o) for o in permutations(range(n)))
