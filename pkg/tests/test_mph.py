from fractions import Fraction
from math import ceil

import pytest

from qpart.classify import is_q_partitioning
from qpart.mph import (
    MPHRepresentation,
    NotPartitioning,
    PHClause,
    binomial_floor_mph,
    eval_mph,
    mph_witness,
    near_equal_blocks,
    verify_mph,
)
from qpart.setfn import (
    additive,
    check_axioms,
    gen_binomial_floor,
    gen_random_subadditive,
    gen_threshold,
    gen_xos,
)


def test_eval_basics():
    rep = MPHRepresentation(1, [PHClause(1, {1: Fraction(2), 2: Fraction(3)})])
    assert [eval_mph(rep, S) for S in range(4)] == [0, 2, 3, 5]
    assert eval_mph(MPHRepresentation(2, []), 3) == 0


def test_clause_validation():
    with pytest.raises(ValueError):
        PHClause(1, {0b11: Fraction(1)})
    with pytest.raises(ValueError):
        PHClause(2, {0b11: Fraction(-1)})
    with pytest.raises(ValueError):
        MPHRepresentation(2, [PHClause(1, {})])


def test_near_equal_blocks():
    assert near_equal_blocks(0b11111, 3) == [0b01001, 0b10010, 0b00100]
    assert near_equal_blocks(0b101, 4) == [0b001, 0b100]


def test_xos_witness_is_mph1():
    v = gen_xos(4, [[1, 0, 2, 1], [0, 3, 1, 1]])
    rep = mph_witness(v, 4)
    assert rep.k == 1 and rep.max_edge <= 1
    assert verify_mph(rep, v) == (True, None)


@pytest.mark.parametrize("m", [4, 5, 6])
def test_threshold_witness(m):
    for q in range(2, m + 1):
        v = gen_threshold(m, Fraction(q, q - 1))
        rep = mph_witness(v, q)
        assert rep.k == ceil(m / q) and rep.max_edge <= rep.k
        assert verify_mph(rep, v)[0]


def test_clauses_never_exceed_v():
    v = gen_threshold(5, Fraction(3, 2))
    rep = mph_witness(v, 3)
    for c in rep.clauses:
        assert all(c(T) <= v(T) for T in range(32))


def test_binomial_floor_rejected():
    with pytest.raises(NotPartitioning) as e:
        mph_witness(gen_binomial_floor(6, 2), 3)
    assert e.value.lp_value < e.value.target


def test_inflated_weight_detected():
    v = additive([1, 2, 3])
    rep = mph_witness(v, 3)
    E, w = next(iter(rep.clauses[-1].weights.items()))
    rep.clauses[-1].weights[E] = w + 1
    ok, T = verify_mph(rep, v)
    assert not ok and eval_mph(rep, T) != v(T)


def test_binomial_floor_mph():
    v = gen_binomial_floor(6, 2)
    rep = binomial_floor_mph(6, 2)
    assert rep.max_edge <= 2
    assert verify_mph(rep, v)[0]
    assert check_axioms(v).subadditive
    assert not is_q_partitioning(v, 3)[0]


def test_json_round_trip():
    v = gen_random_subadditive(4, 2)
    rep = mph_witness(v, 2)
    back = MPHRepresentation.from_json(rep.to_json())
    assert back == rep
