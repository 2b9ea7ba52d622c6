import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as hs

from purelottery import oracle
from purelottery import strategies as st
from purelottery.harness import play_election


# ----------------------------------------------------------------- honest
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 7])
def test_unit_weights_uniform(n):
    dist = oracle.enumerate_honest([1] * n)
    assert dist == {p: F(1, n) for p in range(1, n + 1)}


def test_weighted_distribution():
    # enumerated once and frozen; equals stake over total
    assert oracle.enumerate_honest([1, 2, 3, 2]) == {1: F(1, 8), 2: F(1, 4), 3: F(3, 8), 4: F(1, 4)}
    assert oracle.enumerate_honest([1, 2, 1]) == {1: F(1, 4), 2: F(1, 2), 3: F(1, 4)}


@settings(max_examples=30, deadline=None)
@given(hs.lists(hs.integers(1, 3), min_size=1, max_size=4))
def test_proportional_to_weight(ws):
    dist = oracle.enumerate_honest(ws)
    assert sum(dist.values()) == 1
    assert all(dist[i + 1] == F(w, sum(ws)) for i, w in enumerate(ws))


def test_exact_rationals():
    assert all(isinstance(v, F) for v in oracle.enumerate_honest([2, 1, 1]).values())


@pytest.mark.parametrize("who", [1, 2, 3, 4])
def test_monotone_in_weight(who):
    base = oracle.enumerate_honest([1] * 4)
    ws = [1] * 4
    ws[who - 1] = 2
    assert oracle.enumerate_honest(ws)[who] > base[who]


def test_joint_space_and_size_error():
    assert oracle.joint_space([1, 1]) == 4
    assert oracle.joint_space([1] * 4) == 4 * 4 * 16
    with pytest.raises(oracle.SizeError):
        oracle.enumerate_honest([1] * 16)
    with pytest.raises(oracle.SizeError):
        oracle.enumerate_honest([1] * 4, limit=10)


@pytest.mark.parametrize("ws", [[1, 1, 1], [1] * 4, [1, 2, 3, 2], [2, 1, 1, 3, 1]])
def test_engine_agrees_with_oracle(ws):
    rng = random.Random(len(ws))
    for s in range(40):
        vals = oracle.sample_assignment(ws, rng)
        strats = [st.Scripted({j: v for (p, j), v in vals.items() if p == q})
                  for q in range(1, len(ws) + 1)]
        el = play_election(ws, strats, seed=s)
        assert el.outcome() == oracle.resolve(ws, vals)


# -------------------------------------------------------------- coalitions
def test_worst_case_two_players():
    assert oracle.worst_case_honest([1, 1], 1) == F(1, 2)
    assert oracle.worst_case_honest([1, 1], 2) == F(1, 2)


@pytest.mark.parametrize("who", [1, 2, 3, 4])
def test_worst_case_four_players(who):
    assert oracle.worst_case_honest([1] * 4, who) == F(1, 4)


@pytest.mark.parametrize("who", [1, 2, 3])
def test_worst_case_three_players(who):
    assert oracle.worst_case_honest([1, 1, 1], who) >= F(1, 3)


def test_worst_case_weighted():
    for ws in ([1, 2], [2, 1, 1], [1, 2, 3, 2]):
        for p in range(1, len(ws) + 1):
            assert oracle.worst_case_honest(ws, p) >= F(ws[p - 1], sum(ws))


@pytest.mark.parametrize("coalition", [{1}, {2, 3}, {1, 2, 4}, {1, 2, 3, 4}])
def test_coalition_gains_nothing(coalition):
    assert oracle.coalition_best([1] * 4, coalition) == F(len(coalition), 4)


def test_coalition_bad_inputs():
    with pytest.raises(ValueError):
        oracle.worst_case_honest([1, 1], 5)
    with pytest.raises(ValueError):
        oracle.coalition_best([1, 1], {3})
    assert oracle.worst_case_honest([3], 1) == 1


# ---------------------------------------------------------------- variants
def test_aversion_two_players():
    assert oracle.enumerate_variant("aversion", 2) == {1: F(1, 2), 2: F(1, 2)}


def test_aversion_uniform_loser():
    assert oracle.enumerate_variant("aversion", 4) == {p: F(1, 4) for p in range(1, 5)}


def test_early_stop_marginals():
    dist = oracle.enumerate_variant("early-stop", 4, z=2)
    assert sum(dist.values()) == 1
    assert oracle.marginals(dist) == {p: F(1, 2) for p in range(1, 5)}
    # each leader comes from its own half of the bracket
    assert all(a in (1, 2) and b in (3, 4) for a, b in dist)


def test_early_stop_whole_field():
    assert oracle.enumerate_variant("early-stop", 4, z=4) == {(1, 2, 3, 4): 1}


def test_parallel_distinct_leaders():
    dist = oracle.enumerate_variant("parallel", 4, z=2)
    assert sum(dist.values()) == 1
    assert all(len(set(k)) == 2 for k in dist)


def test_sequential_marginals():
    dist = oracle.enumerate_variant("sequential", 4, z=2)
    assert oracle.marginals(dist) == {p: F(1, 2) for p in range(1, 5)}
    assert all(len(set(k)) == 2 for k in dist)


def test_ranking_uniform_over_positions():
    dist = oracle.enumerate_variant("ranking", 4)
    assert sum(dist.values()) == 1
    for pos in range(4):
        for p in range(1, 5):
            assert sum(v for r, v in dist.items() if r[pos] == p) == F(1, 4)


def test_variant_errors():
    with pytest.raises(ValueError):
        oracle.enumerate_variant("nope", 4)
    with pytest.raises(ValueError):
        oracle.enumerate_variant("ranking", 3)
    with pytest.raises(ValueError):
        oracle.enumerate_variant("early-stop", 4, z=3)
    with pytest.raises(oracle.SizeError):
        oracle.enumerate_variant("parallel", 8, z=3, limit=1000)


def test_marginals_skip_none():
    assert oracle.marginals({(1, None): F(1, 2), (2, 1): F(1, 2)}) == {1: F(1), 2: F(1, 2)}
