"""Protocol variants on top of the engine.

* ranking: losers of every round start a side tournament,
* several leaders: early stop, sequential, permutation and parallel,
* leader aversion: match winners leave, the last one standing pays.

Variants that reorganise players between rounds run each round as a set of
one-round elections (fresh per-round commitments); strategies still see
global player ids and round numbers through :class:`_Relabel`.
"""
from __future__ import annotations

import dataclasses
import hashlib
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import bracket as bk
from . import strategies as st
from .commitment import SALT_SIZE, commit
from .engine import EngineConfig, Election, Phase, RevealMessage
from .harness import derive_seed, play_election

SCHEMES = ("early-stop", "sequential", "permutation", "parallel")


class VariantError(ValueError):
    pass


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def _strategies(n: int, strategies, seed: int) -> list:
    if strategies is None:
        rng = random.Random(derive_seed(seed, -1))
        return [st.Honest(rng=rng) for _ in range(n)]
    strategies = list(strategies)
    if len(strategies) != n:
        raise VariantError(f"need {n} strategies, got {len(strategies)}")
    return strategies


class _Relabel(st.Strategy):
    """Presents a sub-election to a strategy in global ids and rounds."""

    def __init__(self, inner, ids: Sequence[int], round_offset: int):
        self.inner = inner
        self.ids = list(ids)
        self.offset = round_offset

    def _g(self, p):
        return None if p is None else self.ids[p - 1]

    def choose_value(self, ctx):
        return self.inner.choose_value(dataclasses.replace(
            ctx, player=self._g(ctx.player), round=ctx.round + self.offset))

    def reveal(self, ctx):
        return self.inner.reveal(dataclasses.replace(
            ctx, player=self._g(ctx.player), round=ctx.round + self.offset,
            opponent=self._g(ctx.opponent)))


_ONE_ROUND = EngineConfig(commit_mode="per-round", stop_after_round=1,
                          track_signup_costs=False, record_trace=False)


@dataclass(frozen=True)
class Match:
    round: int
    left: int
    right: Optional[int]
    left_value: Optional[int]
    right_value: Optional[int]
    winner: Optional[int]  # None when neither revealed


def _play_round(group: Sequence[int], strat: dict, round_no: int, seed,
                silent=frozenset()) -> tuple[list[Match], Election]:
    """Pair ``group`` consecutively and play one round of skewed games.

    Players in ``silent`` are dummies standing in for a withdrawn player:
    they never reveal.
    """
    if len(group) < 2:
        raise VariantError("a round needs at least two players")
    wrapped = [_Relabel(st.AlwaysWithhold() if p in silent else strat[p], group, round_no - 1)
               for p in group]
    el = play_election([1] * len(group), wrapped, _ONE_ROUND, seed=seed)
    glob = lambda occ: None if occ is None or occ.player is None else group[occ.player - 1]  # noqa: E731
    out = []
    for (_, _, _, left, right, lv, rv, side) in el.history:
        a, b = glob(left), glob(right)
        win = None if side is None else (a if side == "left" else b)
        out.append(Match(round_no, a, b, lv, rv, win))
    # odd groups: players whose first match is later get a bye this round
    seen = {q for m in out for q in (m.left, m.right)}
    out.extend(Match(round_no, p, None, None, None, p) for p in group if p not in seen)
    return out, el


def _add_messages(acc: dict, el: Election, group: Sequence[int]):
    for p, c in el.accepted.items():
        g = group[p - 1]
        acc[g] = acc.get(g, 0) + c


# ------------------------------------------------------------------ ranking
@dataclass
class Ranking:
    order: tuple            # best to worst
    matches: list           # every Match, in play order
    messages: dict          # player -> accepted messages
    groups: list = field(default_factory=list)  # per round: the groups that played

    def matches_played(self) -> dict[int, int]:
        c: dict[int, int] = {}
        for m in self.matches:
            for p in (m.left, m.right):
                c[p] = c.get(p, 0) + 1
        return c

    def to_json(self):
        return {"scheme": "ranking", "ranking": list(self.order),
                "message_stats": {str(p): c for p, c in sorted(self.messages.items())}}


def run_ranking(n: int, strategies=None, seed: int = 0, strict: bool = True) -> Ranking:
    """Full ranking of ``n = 2^m`` players.

    Every round each group plays its first round; winners keep the group's
    place and its losers form the group right behind it.  Withholders lose;
    if both players of a match withhold, a dummy for the left one takes the
    winner's place and never reveals again.
    """
    if n < 1:
        raise VariantError("need at least one player")
    if strict and not _is_pow2(n):
        raise VariantError(f"ranking needs a power-of-two number of players, got {n}")
    strat = dict(zip(range(1, n + 1), _strategies(n, strategies, seed)))
    groups = [list(range(1, n + 1))]
    silent: set[int] = set()
    matches, messages, played = [], {}, []
    j = 0
    while any(len(g) > 1 for g in groups):
        j += 1
        played.append([tuple(g) for g in groups])
        nxt = []
        for gi, g in enumerate(groups):
            if len(g) == 1:
                nxt.append(g)
                continue
            res, el = _play_round(g, strat, j, derive_seed(seed, j, gi), silent)
            _add_messages(messages, el, g)
            win, lose = [], []
            for m in res:
                if m.right is None:
                    win.append(m.left)
                    continue
                if m.winner is None:
                    silent.add(m.left)
                    w = m.left
                else:
                    w = m.winner
                win.append(w)
                lose.append(m.right if w == m.left else m.left)
            matches.extend(res)
            nxt.append(win)
            if lose:
                nxt.append(lose)
        groups = nxt
    return Ranking(tuple(g[0] for g in groups), matches, messages, played)


def ranking_respects_rounds(r: Ranking) -> bool:
    """Round-j match winners rank above the players their group lost in round j."""
    pos = {p: i for i, p in enumerate(r.order)}
    by_round: dict[int, list[Match]] = {}
    for m in r.matches:
        by_round.setdefault(m.round, []).append(m)
    for j, groups in enumerate(r.groups, start=1):
        ms = iter(by_round.get(j, []))
        for g in groups:
            if len(g) < 2:
                continue
            wins, losses, covered = [], [], set()
            while covered != set(g):
                m = next(ms)
                covered.update(q for q in (m.left, m.right) if q is not None)
                if m.right is None:
                    continue
                w = m.winner if m.winner is not None else m.left
                wins.append(w)
                losses.append(m.right if w == m.left else m.left)
            if losses and max(pos[p] for p in wins) > min(pos[p] for p in losses):
                return False
    return sorted(r.order) == list(range(1, len(r.order) + 1))


# ----------------------------------------------------------- multi-leader
@dataclass
class LeaderSet:
    scheme: str
    leaders: tuple          # None marks a slot no real player filled
    messages: dict
    detail: dict = field(default_factory=dict)

    def to_json(self):
        return {"scheme": self.scheme, "leaders": list(self.leaders),
                "message_stats": {str(p): c for p, c in sorted(self.messages.items())},
                **({"detail": self.detail} if self.detail else {})}


def _log2(x: int) -> int:
    return x.bit_length() - 1


def run_multi_leader(n: int, z: int, scheme: str, strategies=None, seed: int = 0) -> LeaderSet:
    if scheme not in SCHEMES:
        raise VariantError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    if not 1 <= z <= n:
        raise VariantError(f"need 1 <= z <= n, got z={z}, n={n}")
    strats = _strategies(n, strategies, seed)
    return {"early-stop": _early_stop, "sequential": _sequential,
            "permutation": _permutation, "parallel": _parallel}[scheme](n, z, strats, seed)


def _early_stop(n, z, strats, seed):
    if not _is_pow2(z) or not _is_pow2(n):
        raise VariantError("early stop needs n and z to be powers of two")
    stop = _log2(n) - _log2(z)
    if stop == 0:
        return LeaderSet("early-stop", tuple(range(1, n + 1)), {})
    cfg = EngineConfig(commit_mode="per-round", stop_after_round=stop,
                       track_signup_costs=False, record_trace=False)
    el = play_election([1] * n, strats, cfg, seed=seed)
    leaders = tuple(o.player if o.kind == "real" else None for o in el.survivors())
    return LeaderSet("early-stop", leaders, dict(el.accepted))


def _sequential(n, z, strats, seed):
    left = list(range(1, n + 1))
    strat = dict(zip(left, strats))
    leaders, messages = [], {}
    for t in range(z):
        if len(left) == 1:
            leaders.append(left.pop())
            continue
        wrapped = [_Relabel(strat[p], left, 0) for p in left]
        el = play_election([1] * len(left), wrapped,
                           EngineConfig(track_signup_costs=False, record_trace=False),
                           seed=derive_seed(seed, t))
        _add_messages(messages, el, left)
        w = el.outcome()
        if w is None:
            leaders.append(None)
            continue
        g = left[w - 1]
        leaders.append(g)
        left.remove(g)
    return LeaderSet("sequential", tuple(leaders), messages)


def reshuffle(survivors: Sequence[int], matches: Sequence[Match], salts: dict) -> list[int]:
    """Next-round order derived from the round's accepted reveals.

    The seed hashes, in match order, each accepted reveal as player id,
    value and salt (8 + 8 + 32 octets).
    """
    h = hashlib.sha256()
    for m in matches:
        for p, v in ((m.left, m.left_value), (m.right, m.right_value)):
            if p is not None and v is not None:
                h.update(p.to_bytes(8, "big") + v.to_bytes(8, "big") + salts[p])
    order = list(survivors)
    random.Random(h.digest()).shuffle(order)
    return order


def _permutation(n, z, strats, seed):
    if not _is_pow2(z) or not _is_pow2(n):
        raise VariantError("the permutation scheme needs n and z to be powers of two")
    rounds = _log2(n) - _log2(z)
    if rounds < 2:
        raise VariantError("the permutation scheme needs at least two reveal rounds")
    strat = dict(zip(range(1, n + 1), strats))
    order = list(range(1, n + 1))
    silent: set[int] = set()
    messages, orders = {}, [tuple(order)]
    for j in range(1, rounds + 1):
        res, el = _play_round(order, strat, j, derive_seed(seed, j), silent)
        _add_messages(messages, el, order)
        salts = {order[p - 1]: msg.salt for p, msg in el.reveals[1].items()}
        surv = []
        for m in res:
            if m.winner is None:
                silent.add(m.left)
                surv.append(m.left)
            else:
                surv.append(m.winner)
        order = reshuffle(surv, res, salts) if j < rounds else surv
        orders.append(tuple(order))
    leaders = tuple(None if p in silent else p for p in order)
    return LeaderSet("permutation", leaders, messages, {"orders": [list(o) for o in orders]})


def _elimination_order(el: Election) -> list[int]:
    """Players by how late they were knocked out, latest first."""
    out: dict[int, int] = {}
    for (j, idx, _, left, right, lv, rv, side) in el.history:
        for occ, s in ((left, "left"), (right, "right")):
            if occ.kind == "real" and side != s:
                out[occ.player] = j
    return sorted(out, key=lambda p: (-out[p], p))


def _parallel(n, z, strats, seed):
    """``z`` lockstep tournaments, one combined message per player per round.

    A player whose combined message would leave out a tournament it is
    still playing is disqualified in all of them.  A leader that wins again
    is de-elected there and replaced by its most recent opponent still free.
    """
    cfg = EngineConfig(commit_mode="per-round", track_signup_costs=False, record_trace=False)
    els = [Election(cfg) for _ in range(z)]
    rng = random.Random(seed)
    strat = dict(zip(range(1, n + 1), strats))
    br = bk.build([1] * n)
    players = list(br.players)
    vals = [{p: {} for p in players} for _ in range(z)]
    salts = [{p: {} for p in players} for _ in range(z)]
    messages = dict.fromkeys(players, 0)

    def fresh(t, p, nd):
        v = strat[p].choose_value(st.ValueContext(p, nd.index, nd.k, nd.height))
        s = rng.randbytes(SALT_SIZE)
        vals[t][p][nd.index], salts[t][p][nd.index] = v, s
        return commit(v, s)

    for p in players:
        first = br.path(p)[0] if br.path(p) else None
        for t, el in enumerate(els):
            h = fresh(t, p, first) if first is not None else commit(0, rng.randbytes(SALT_SIZE))
            el.register(1, h)
        messages[p] += 1
    for el in els:
        el.advance_to_deadline()
        el.close_signup()

    ticks = cfg.round_ticks
    while any(el.phase is Phase.REVEAL for el in els):
        due = [el.due() if el.phase is Phase.REVEAL else {} for el in els]
        who = sorted({p for d in due for p in d})
        acted: set[int] = set()
        for tick in range(ticks):
            last = tick == ticks - 1
            sends = []
            for p in who:
                if p in acted:
                    continue
                mine = [(t, d[p]) for t, d in enumerate(due) if p in d]
                calls = []
                for t, nd in mine:
                    el = els[t]
                    opp = el.opponent_of(p)
                    shown = el.stage_reveals()
                    ctx = st.RevealContext(
                        player=p, round=el.round, tick=tick, last_tick=last, node=nd.index,
                        side=el.side_of(p), l=nd.l, k=nd.k, own_value=vals[t][p][nd.index],
                        opponent=opp, opponent_value=shown.get(opp) if opp is not None else None)
                    calls.append(strat[p].reveal(ctx))
                if all(calls):
                    sends.append((p, mine))
                elif last:
                    acted.add(p)
                    if any(calls):
                        for el in els:
                            el.disqualify(p)
            for p, mine in sends:
                acted.add(p)
                messages[p] += 1
                for t, nd in mine:
                    el = els[t]
                    nxt = fresh(t, p, br.nodes[nd.index >> 1]) if nd.index != 1 else None
                    el.submit_reveal(RevealMessage(p, el.round, vals[t][p][nd.index],
                                                   salts[t][p][nd.index], nxt))
            for el in els:
                if el.phase is Phase.REVEAL:
                    el.advance(1)
        for el in els:
            if el.phase is Phase.REVEAL:
                el.advance_to_deadline()
                el.close_round()

    banned = set().union(*(el.disqualified for el in els))
    leaders, raw, replaced = [], [], []
    for el in els:
        w = el.outcome()
        raw.append(w)
        if w is not None and w not in leaders and w not in banned:
            leaders.append(w)
            replaced.append(False)
            continue
        beaten = list(el.beaten.get(1, [])) if w is not None else []
        pool = beaten + [p for p in _elimination_order(el) if p not in beaten]
        pool += [p for p in players if p not in pool]
        pick = next((p for p in pool if p not in leaders and p not in banned), None)
        if pick is None:
            pick = next(p for p in pool if p not in leaders)
        leaders.append(pick)
        replaced.append(True)
    return LeaderSet("parallel", tuple(leaders), messages,
                     {"winners": raw, "replaced": replaced, "disqualified": sorted(banned)})


# ---------------------------------------------------------- leader aversion
@dataclass
class Aversion:
    elected: tuple          # the player(s) who pay
    cheaters: tuple
    matches: list
    messages: dict
    alternative: bool = False

    def to_json(self):
        return {"scheme": "leader-aversion" + ("-alternative" if self.alternative else ""),
                "elected": list(self.elected), "cheaters": list(self.cheaters),
                "message_stats": {str(p): c for p, c in sorted(self.messages.items())}}


def run_leader_aversion(n: int, strategies=None, seed: int = 0, alternative: bool = False,
                        strict: bool = True) -> Aversion:
    """Negative election: the winner of each match leaves, the loser stays.

    A player who does not reveal stays in.  If neither reveals, the lower
    registration index stays.  The alternative scheme elects every cheater
    when there is one, and the final loser otherwise.
    """
    if strict and not _is_pow2(n):
        raise VariantError(f"leader aversion needs a power-of-two number of players, got {n}")
    strat = dict(zip(range(1, n + 1), _strategies(n, strategies, seed)))
    group = list(range(1, n + 1))
    cheaters: set[int] = set()
    matches, messages = [], {}
    j = 0
    while len(group) > 1:
        j += 1
        res, el = _play_round(group, strat, j, derive_seed(seed, j))
        _add_messages(messages, el, group)
        stay = []
        for m in res:
            if m.right is None:
                stay.append(m.left)
                continue
            if m.left_value is None:
                cheaters.add(m.left)
            if m.right_value is None:
                cheaters.add(m.right)
            if m.winner is None:
                stay.append(min(m.left, m.right))
            else:
                stay.append(m.right if m.winner == m.left else m.left)
        matches.extend(res)
        group = stay
    if alternative and cheaters:
        elected = tuple(sorted(cheaters))
    else:
        elected = (group[0],)
    return Aversion(elected, tuple(sorted(cheaters)), matches, messages, alternative)
