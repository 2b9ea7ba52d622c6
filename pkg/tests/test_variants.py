import math
import random
from collections import Counter
from fractions import Fraction as F

import pytest

from purelottery import oracle
from purelottery import strategies as st
from purelottery import variants as vr


def scripted(values_by_player, withhold=None):
    withhold = withhold or {}
    return [st.Scripted(v, withhold.get(p, ())) for p, v in enumerate(values_by_player, start=1)]


# ------------------------------------------------------------------ ranking
def test_ranking_two_players():
    r = vr.run_ranking(2, scripted([{1: 0}, {1: 1}]))
    assert r.order == (2, 1)  # y = 1: right wins


def test_ranking_four_players_layout():
    # round 1: 1 beats 2, 4 beats 3; round 2: final 1 v 4 and losers' match 2 v 3
    vals = [{1: 0, 2: 0}, {1: 0, 2: 1}, {1: 0, 2: 1}, {1: 1, 2: 1}]
    r = vr.run_ranking(4, scripted(vals))
    assert r.groups == [[(1, 2, 3, 4)], [(1, 4), (2, 3)]]
    assert r.order == (4, 1, 2, 3)
    assert vr.ranking_respects_rounds(r)


@pytest.mark.parametrize("seed", range(10))
def test_ranking_structure(seed):
    r = vr.run_ranking(8, seed=seed)
    assert sorted(r.order) == list(range(1, 9))
    assert vr.ranking_respects_rounds(r)
    assert set(r.matches_played().values()) == {3}
    assert set(r.messages.values()) == {9}  # register, commit and one reveal per round


def test_ranking_with_withholders_still_a_permutation():
    for seed in range(10):
        rng = random.Random(seed)
        strats = [rng.choice([st.Honest, st.AlwaysWithhold, st.WithholdIfLosing])(rng=rng)
                  for _ in range(8)]
        r = vr.run_ranking(8, strats, seed=seed)
        assert sorted(r.order) == list(range(1, 9))
        assert vr.ranking_respects_rounds(r)


def test_ranking_winner_uniform():
    trials = 800
    top = Counter(vr.run_ranking(4, seed=s).order[0] for s in range(trials))
    band = 3 * math.sqrt(0.25 * 0.75 / trials)
    assert all(abs(top[p] / trials - 0.25) <= band for p in range(1, 5))


def test_ranking_needs_power_of_two():
    with pytest.raises(vr.VariantError):
        vr.run_ranking(6)
    for seed in range(5):
        r = vr.run_ranking(6, seed=seed, strict=False)
        assert sorted(r.order) == list(range(1, 7))
        assert vr.ranking_respects_rounds(r)


# -------------------------------------------------------------- early stop
def test_early_stop_returns_round_one_winners():
    vals = [{1: 0}, {1: 0}, {1: 0}, {1: 1}]  # 1 beats 2, 4 beats 3
    res = vr.run_multi_leader(4, 2, "early-stop", scripted(vals))
    assert res.leaders == (1, 4)


def test_early_stop_frequencies():
    trials = 600
    c = Counter(p for s in range(trials) for p in vr.run_multi_leader(4, 2, "early-stop", seed=s).leaders)
    band = 3 * math.sqrt(0.25 / trials)
    assert all(abs(c[p] / trials - 0.5) <= band for p in range(1, 5))


def test_early_stop_errors():
    with pytest.raises(vr.VariantError):
        vr.run_multi_leader(6, 2, "early-stop")
    with pytest.raises(vr.VariantError):
        vr.run_multi_leader(8, 3, "early-stop")
    with pytest.raises(vr.VariantError):
        vr.run_multi_leader(4, 5, "sequential")
    with pytest.raises(vr.VariantError):
        vr.run_multi_leader(4, 2, "nope")


def test_signup_order_controls_outcome_variability():
    dist = oracle.enumerate_variant("early-stop", 4, z=2)
    hits = lambda slots: sum(p for s, p in dist.items() if set(s) & slots)  # noqa: E731
    assert hits({1, 2}) == 1
    assert hits({1, 3}) == F(3, 4)


# -------------------------------------------------------------- sequential
@pytest.mark.parametrize("seed", range(5))
def test_sequential_distinct(seed):
    res = vr.run_multi_leader(5, 3, "sequential", seed=seed)
    assert len(set(res.leaders)) == 3 and set(res.leaders) <= set(range(1, 6))


def test_sequential_everyone():
    assert sorted(vr.run_multi_leader(3, 3, "sequential").leaders) == [1, 2, 3]


# ------------------------------------------------------------- permutation
def test_reshuffle_deterministic_permutation():
    ms = [vr.Match(1, 1, 2, 0, 1, 2), vr.Match(1, 3, 4, 1, 1, 3)]
    salts = {p: bytes([p]) * 32 for p in range(1, 5)}
    a = vr.reshuffle([2, 3], ms, salts)
    assert sorted(a) == [2, 3] and a == vr.reshuffle([2, 3], ms, salts)
    orders = {tuple(vr.reshuffle(list(range(8)), ms, {**salts, 4: bytes([s]) * 32})) for s in range(30)}
    assert len(orders) > 1
    assert all(sorted(o) == list(range(8)) for o in orders)


@pytest.mark.parametrize("seed", range(5))
def test_permutation_scheme(seed):
    res = vr.run_multi_leader(8, 2, "permutation", seed=seed)
    orders = res.detail["orders"]
    assert orders[0] == list(range(1, 9))
    assert len(orders) == 3 and len(set(orders[1])) == 4 and set(orders[2]) <= set(orders[1])
    assert len(set(res.leaders)) == 2
    again = vr.run_multi_leader(8, 2, "permutation", seed=seed)
    assert again.detail == res.detail


def test_permutation_needs_two_rounds():
    with pytest.raises(vr.VariantError):
        vr.run_multi_leader(4, 2, "permutation")
    assert len(vr.run_multi_leader(4, 1, "permutation").leaders) == 1


# ---------------------------------------------------------------- parallel
def test_parallel_repeat_winner_replaced_by_last_opponent():
    # identical values in both tournaments: 1 wins twice, 3 lost the final to 1
    strats = [st.Scripted(default=0) for _ in range(4)]
    res = vr.run_multi_leader(4, 2, "parallel", strats)
    assert res.detail["winners"] == [1, 1]
    assert res.leaders == (1, 3)
    assert res.detail["replaced"] == [False, True]


class Alternating(st.Strategy):
    """Reveals in every other tournament: a partial combined message."""

    def __init__(self):
        self.flip = False

    def choose_value(self, ctx):
        return 0

    def reveal(self, ctx):
        self.flip = not self.flip
        return self.flip


def test_parallel_partial_reveal_disqualifies_everywhere():
    strats = [Alternating()] + [st.Honest(seed=i) for i in range(3)]
    res = vr.run_multi_leader(4, 2, "parallel", strats, seed=1)
    assert res.detail["disqualified"] == [1]
    assert 1 not in res.leaders and len(set(res.leaders)) == 2


@pytest.mark.parametrize("seed", range(8))
def test_parallel_always_distinct(seed):
    rng = random.Random(seed)
    strats = [rng.choice([st.Honest, st.AlwaysWithhold, st.WithholdIfLosing])(rng=rng)
              for _ in range(6)]
    res = vr.run_multi_leader(6, 3, "parallel", strats, seed=seed)
    assert len(set(res.leaders)) == 3 and None not in res.leaders


def test_parallel_one_message_per_round():
    res = vr.run_multi_leader(8, 3, "parallel", seed=2)
    # registration plus at most one combined reveal per round
    assert max(res.messages.values()) <= 1 + 3


# --------------------------------------------------------- leader aversion
def test_aversion_honest_elects_one():
    for seed in range(6):
        res = vr.run_leader_aversion(4, seed=seed)
        assert len(res.elected) == 1 and res.cheaters == ()


def test_aversion_withhold_then_win_exits():
    # 3 withholds in round 1 and stays; it then beats 2 in round 2 and leaves
    strats = scripted([{1: 0}, {1: 0, 2: 0}, {1: 0, 2: 1}, {1: 0}], withhold={3: {1}})
    res = vr.run_leader_aversion(4, strats)
    assert res.elected == (2,) and res.cheaters == (3,)
    alt = vr.run_leader_aversion(4, strats, alternative=True)
    assert alt.elected == (3,)


def test_aversion_alternative_elects_all_cheaters():
    strats = [st.AlwaysWithhold(seed=1), st.Honest(seed=2), st.AlwaysWithhold(seed=3), st.Honest(seed=4)]
    res = vr.run_leader_aversion(4, strats, alternative=True)
    assert res.elected == (1, 3)


def test_aversion_double_withhold_lower_index_stays():
    strats = [st.AlwaysWithhold(seed=1), st.AlwaysWithhold(seed=2)]
    res = vr.run_leader_aversion(2, strats)
    assert res.elected == (1,)


@pytest.mark.parametrize("seed", range(6))
def test_aversion_withholder_never_exits(seed):
    strats = [st.Honest(seed=seed + i) for i in range(8)]
    strats[seed % 8] = st.AlwaysWithhold()
    assert vr.run_leader_aversion(8, strats, seed=seed).elected == (seed % 8 + 1,)


def test_aversion_needs_power_of_two():
    with pytest.raises(vr.VariantError):
        vr.run_leader_aversion(3)
    assert len(vr.run_leader_aversion(5, strict=False).elected) == 1


def test_json_shapes():
    assert vr.run_ranking(2).to_json()["scheme"] == "ranking"
    assert vr.run_multi_leader(4, 2, "sequential").to_json()["scheme"] == "sequential"
    assert vr.run_leader_aversion(2, alternative=True).to_json()["scheme"] == "leader-aversion-alternative"
