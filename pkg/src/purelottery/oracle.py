"""Exact distributions and adversarial worst cases by exhaustive enumeration.

Everything here is independent of the engine: matches are resolved from
the bracket shape alone, and probabilities are exact :class:`Fraction`s.
Instances whose enumeration would exceed ``limit`` outcomes raise
:class:`SizeError` instead of falling back to sampling.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from math import prod
from typing import Iterable, Mapping, Optional, Sequence

from . import bracket as bk

LIMIT = 10 ** 7


class SizeError(ValueError):
    """Instance too large for exhaustive enumeration."""


def _skewed(a: int, b: int, l: int, k: int) -> str:
    return "left" if (a + b) % k < l else "right"


def _rounds(br: bk.Bracket) -> list[list[bk.Node]]:
    by: dict[int, list[bk.Node]] = {}
    for nd in br.nodes.values():
        if not nd.is_leaf:
            by.setdefault(nd.height, []).append(nd)
    return [sorted(by[h], key=lambda nd: nd.index) for h in sorted(by)]


def joint_space(weights: Sequence[int]) -> int:
    """Number of joint honest assignments: product of k^2 over all matches."""
    br = bk.build(weights)
    return prod(nd.k ** 2 for nd in br.nodes.values() if not nd.is_leaf)


# ----------------------------------------------------------------- honest
def resolve(weights: Sequence[int], values: Mapping) -> Optional[int]:
    """Winner of an all-reveal tournament under a joint assignment.

    ``values[(player, round)]`` is the value ``player`` draws for its match
    in ``round``; players always reveal.
    """
    br = bk.build(weights)
    at = {nd.index: nd.player for nd in br.leaves}
    for j, matches in enumerate(_rounds(br), start=1):
        for nd in matches:
            a, b = at[nd.left], at[nd.right]
            side = _skewed(values[(a, j)], values[(b, j)], nd.l, nd.k)
            at[nd.index] = a if side == "left" else b
    return at[1]


def enumerate_honest(weights: Sequence[int], limit: int = LIMIT) -> dict[int, Fraction]:
    """Exact win probability of every player when all play honestly.

    Walks every joint assignment of per-round values (each live player
    draws uniformly from ``{0..k-1}`` of its current match) and counts wins.
    """
    br = bk.build(weights)
    space = joint_space(weights)
    if space > limit:
        raise SizeError(f"{space} joint assignments exceed the limit of {limit}")
    rounds = _rounds(br)
    wins = dict.fromkeys(br.players, 0)
    if not rounds:
        return {br.players[0]: Fraction(1)}

    def walk(j: int, at: dict):
        if j == len(rounds):
            wins[at[1]] += 1
            return
        matches = rounds[j]
        ranges = [range(nd.k) for nd in matches for _ in (0, 1)]
        for vals in itertools.product(*ranges):
            nxt = dict(at)
            for i, nd in enumerate(matches):
                side = _skewed(vals[2 * i], vals[2 * i + 1], nd.l, nd.k)
                nxt[nd.index] = at[nd.left] if side == "left" else at[nd.right]
            walk(j + 1, nxt)

    walk(0, {nd.index: nd.player for nd in br.leaves})
    return {p: Fraction(c, space) for p, c in wins.items()}


def sample_assignment(weights: Sequence[int], rng) -> dict:
    """One uniformly drawn joint assignment, keyed ``(player, round)``."""
    br = bk.build(weights)
    out = {}
    for p in br.players:
        for nd in br.path(p):
            out[(p, nd.height)] = rng.randrange(nd.k)
    return out


# ------------------------------------------------------------- coalitions
# occupant types in the coalition game
C, H, T, D = "C", "H", "T", "D"


class _Game:
    """Coalition game on a fixed bracket, solved by memoised minimax.

    Each round the coalition fixes values for its live members, honest
    values are drawn, and the coalition (seeing them) picks which members
    reveal.  Withholders are replaced by dummies.  ``V`` is the coalition's
    optimal payoff from a frontier, where the payoff is 1 if the root ends
    up with a coalition member (``max``) or with anyone but a target
    (``min``).
    """

    def __init__(self, br: bk.Bracket, mode: str, limit: int = LIMIT):
        if mode not in ("max", "min"):
            raise ValueError(mode)
        self.br = br
        self.mode = mode
        self.limit = limit
        self.rounds = _rounds(br)
        self.nodes = 0
        self._memo: dict = {}

    def _tick(self, n: int = 1):
        self.nodes += n
        if self.nodes > self.limit:
            raise SizeError(f"coalition search exceeded {self.limit} decision nodes")

    def payoff(self, root: str) -> Fraction:
        if self.mode == "max":
            return Fraction(int(root == C))
        return Fraction(int(root != T))

    def successors(self, j: int, frontier: dict, cvals: dict, hvals: dict):
        """Yield ``(reveal set, next frontier)`` for every coalition reveal choice."""
        matches = self.rounds[j]
        slots = [(nd.index, side) for nd in matches for side in ("left", "right")
                 if frontier[nd.left if side == "left" else nd.right] == C]
        for r in range(len(slots), -1, -1):
            for chosen in itertools.combinations(slots, r):
                chosen = set(chosen)
                nxt = dict(frontier)
                for nd in matches:
                    got = []
                    for side, child in (("left", nd.left), ("right", nd.right)):
                        t = frontier[child]
                        if t in (H, T):
                            got.append(hvals[(nd.index, side)])
                        elif t == C and (nd.index, side) in chosen:
                            got.append(cvals[(nd.index, side)])
                        else:
                            got.append(None)
                    a, b = got
                    if a is None and b is None:
                        win = D
                    elif b is None:
                        win = frontier[nd.left]
                    elif a is None:
                        win = frontier[nd.right]
                    else:
                        win = frontier[nd.left if _skewed(a, b, nd.l, nd.k) == "left" else nd.right]
                    del nxt[nd.left], nxt[nd.right]
                    nxt[nd.index] = win
                yield chosen, nxt

    def V(self, j: int, frontier: dict) -> Fraction:
        if j == len(self.rounds):
            return self.payoff(frontier[1])
        key = (j, tuple(sorted(frontier.items())))
        got = self._memo.get(key)
        if got is not None:
            return got
        matches = self.rounds[j]
        cslots, hslots = [], []
        for nd in matches:
            for side, child in (("left", nd.left), ("right", nd.right)):
                t = frontier[child]
                if t == C:
                    cslots.append(((nd.index, side), nd.k))
                elif t in (H, T):
                    hslots.append(((nd.index, side), nd.k))
        hspace = prod(k for _, k in hslots)
        best = None
        for cv in itertools.product(*(range(k) for _, k in cslots)):
            cvals = {s: v for (s, _), v in zip(cslots, cv)}
            total = Fraction(0)
            for hv in itertools.product(*(range(k) for _, k in hslots)):
                hvals = {s: v for (s, _), v in zip(hslots, hv)}
                top = None
                for _, nxt in self.successors(j, frontier, cvals, hvals):
                    self._tick()
                    v = self.V(j + 1, nxt)
                    if top is None or v > top:
                        top = v
                total += top
            val = total / hspace
            if best is None or val > best:
                best = val
        self._memo[key] = best
        return best

    def start(self, typing: Mapping[int, str]) -> dict:
        return {nd.index: typing[nd.player] for nd in self.br.leaves}


def _typing(players: Iterable[int], coalition: Iterable[int], targets: Iterable[int] = ()) -> dict:
    coalition, targets = set(coalition), set(targets)
    return {p: C if p in coalition else (T if p in targets else H) for p in players}


def worst_case_honest(weights: Sequence[int], honest_id: int, limit: int = LIMIT) -> Fraction:
    """Least win probability an honest player can be pushed to.

    Every other player belongs to one fully informed coalition that plays
    the optimal pure joint policy against it.
    """
    br = bk.build(weights)
    if honest_id not in br.players:
        raise ValueError(f"unknown player {honest_id}")
    if br.n == 1:
        return Fraction(1)
    g = _Game(br, "min", limit)
    others = [p for p in br.players if p != honest_id]
    return 1 - g.V(0, g.start(_typing(br.players, others, [honest_id])))


def coalition_best(weights: Sequence[int], coalition: Iterable[int], limit: int = LIMIT) -> Fraction:
    """Greatest cumulative win probability a coalition can reach against honest players."""
    br = bk.build(weights)
    coalition = set(coalition)
    if not coalition <= set(br.players):
        raise ValueError("coalition contains unknown players")
    if br.n == 1:
        return Fraction(int(br.players[0] in coalition))
    g = _Game(br, "max", limit)
    return g.V(0, g.start(_typing(br.players, coalition)))


_games: dict = {}


def best_reveal_set(view, coalition) -> set[int]:
    """Members of ``coalition`` that should reveal now, in the live election.

    Reads the election through ``view`` (coalition values via the insider
    channel, honest values only once revealed) and returns the reveal set
    that maximises the continuation value.  Ties prefer revealing more.
    """
    el = view._election
    if el.stage != "reveal":
        raise SizeError("coalition search covers regular rounds in dummy mode only")
    br = view.bracket
    mode, who = coalition.objective()
    g = _games.get((br, mode))
    if g is None:
        g = _games[(br, mode)] = _Game(br, mode)
    members = coalition.members
    targets = who if mode == "min" else ()
    frontier = {}
    for i, occ in el.occupants.items():
        if i != 1 and (i >> 1) in el.occupants:
            continue
        if occ.kind != "real" or occ.player in el.disqualified:
            frontier[i] = D
        elif occ.player in members:
            frontier[i] = C
        else:
            frontier[i] = T if occ.player in targets else H
    j = el.round - 1
    shown = view.revealed()
    cvals, hvals, owner = {}, {}, {}
    for nd in g.rounds[j]:
        for side, child in (("left", nd.left), ("right", nd.right)):
            occ = el.occupants[child]
            if frontier[child] == C:
                cvals[(nd.index, side)] = view.secret_value(occ.player, nd.index)
                owner[(nd.index, side)] = occ.player
            elif frontier[child] in (H, T):
                # an honest player that has not revealed by now never will
                v = shown.get(occ.player)
                if v is None:
                    frontier[child] = D
                else:
                    hvals[(nd.index, side)] = v
    best, plan = None, set()
    for chosen, nxt in g.successors(j, frontier, cvals, hvals):
        v = g.V(j + 1, nxt)
        if best is None or v > best:
            best, plan = v, {owner[s] for s in chosen}
    return plan


# ----------------------------------------------------------------- variants
VARIANTS = ("early-stop", "sequential", "parallel", "ranking", "aversion")


def _tournaments(weights: Sequence[int], stop: Optional[int] = None, limit: int = LIMIT):
    """Tally honest tournament records over every joint assignment.

    A record is ``(survivors, beaten, knocked_out)``: occupants of the last
    decided level left to right, the root winner's victims most recent
    first, and every eliminated player with its elimination round, latest
    first.  Returns ``(Counter of records, joint space size)``.
    """
    br = bk.build(weights)
    rounds = _rounds(br)[:stop] if stop is not None else _rounds(br)
    space = prod(nd.k ** 2 for ms in rounds for nd in ms)
    if space > limit:
        raise SizeError(f"{space} joint assignments exceed the limit of {limit}")
    tally: dict = {}
    leaves = {nd.index: nd.player for nd in br.leaves}

    def walk(j, at, beaten, out):
        if j == len(rounds):
            top = sorted((i for i in at if i == 1 or (i >> 1) not in at),
                         key=lambda i: bk._inorder_key(br.nodes[i]))
            rec = (tuple(at[i] for i in top), tuple(beaten.get(1, ())),
                   tuple(sorted(out, key=lambda po: (-po[1], po[0]))))
            tally[rec] = tally.get(rec, 0) + 1
            return
        ms = rounds[j]
        for vals in itertools.product(*[range(nd.k) for nd in ms for _ in (0, 1)]):
            nat, nb, no = dict(at), dict(beaten), list(out)
            for i, nd in enumerate(ms):
                a, b = at[nd.left], at[nd.right]
                if _skewed(vals[2 * i], vals[2 * i + 1], nd.l, nd.k) == "left":
                    w, lo, below = a, b, nd.left
                else:
                    w, lo, below = b, a, nd.right
                nat[nd.index] = w
                nb[nd.index] = (lo,) + tuple(beaten.get(below, ()))
                no.append((lo, j + 1))
            walk(j + 1, nat, nb, no)

    walk(0, leaves, {}, [])
    return tally, space


def _grouped(n: int, rule, limit: int):
    """Exhaust group-structured variants (ranking, aversion) on unit weights.

    ``rule(results)`` maps one group's pairwise results ``(a, b, left
    wins)`` to the groups it splits into.  Returns exact probabilities.
    """
    tally: dict = {}
    seen = [0]

    def walk(groups, den: int):
        live = [g for g in groups if len(g) > 1]
        if not live:
            key = tuple(p for g in groups for p in g)
            tally[key] = tally.get(key, 0) + Fraction(1, den)
            return
        pairs = sum(len(g) // 2 for g in live)
        for vals in itertools.product(range(2), repeat=2 * pairs):
            seen[0] += 1
            if seen[0] > limit:
                raise SizeError(f"enumeration exceeded {limit} assignments")
            it = iter(range(pairs))
            nxt = []
            for g in groups:
                if len(g) == 1:
                    nxt.append(g)
                    continue
                res = []
                for a, b in zip(g[0::2], g[1::2]):
                    i = next(it)
                    res.append((a, b, _skewed(vals[2 * i], vals[2 * i + 1], 1, 2) == "left"))
                nxt.extend(rule(res))
            walk(nxt, den * 4 ** pairs)

    walk([list(range(1, n + 1))], 1)
    return tally, 1


def _rank_rule(res):
    win = [a if left else b for a, b, left in res]
    lose = [b if left else a for a, b, left in res]
    return [win, lose]


def _averse_rule(res):
    return [[b if left else a for a, b, left in res]]


def enumerate_variant(variant: str, n: int, z: int = 1, limit: int = LIMIT) -> dict:
    """Exact outcome distribution of a variant when everyone is honest.

    Outcomes: a ranking tuple (``ranking``), the paying player
    (``aversion``) or the tuple of leaders in slot order (the multi-leader
    schemes).
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    pow2 = n >= 1 and n & (n - 1) == 0
    if variant in ("ranking", "aversion", "early-stop") and not pow2:
        raise ValueError(f"{variant} needs a power-of-two n")
    if variant == "ranking":
        tally, space = _grouped(n, _rank_rule, limit)
    elif variant == "aversion":
        tally, space = _grouped(n, _averse_rule, limit)
        tally = {k[0]: v for k, v in tally.items()}
    elif variant == "early-stop":
        if not (z >= 1 and z & (z - 1) == 0 and z <= n):
            raise ValueError("z must be a power of two no larger than n")
        stop = (n.bit_length() - 1) - (z.bit_length() - 1)
        if stop == 0:
            return {tuple(range(1, n + 1)): Fraction(1)}
        recs, space = _tournaments([1] * n, stop, limit)
        tally = {}
        for (surv, _, _), c in recs.items():
            tally[surv] = tally.get(surv, 0) + c
    elif variant == "sequential":
        tally, space = _sequential_tally(n, z, limit)
    else:
        tally, space = _parallel_tally(n, z, limit)
    return {k: Fraction(c, space) for k, c in tally.items()}


def _winner_counts(m: int, limit: int):
    recs, space = _tournaments([1] * m, None, limit)
    wins: dict = {}
    for (surv, _, _), c in recs.items():
        wins[surv[0]] = wins.get(surv[0], 0) + c
    return wins, space


def _sequential_tally(n, z, limit):
    """``z`` fresh tournaments in a row, each among the players not yet chosen."""
    if not 1 <= z <= n:
        raise ValueError("need 1 <= z <= n")
    tally: dict = {}

    def go(left: tuple, chosen: tuple, p: Fraction):
        if len(chosen) == z:
            tally[chosen] = tally.get(chosen, 0) + p
            return
        if len(left) == 1:
            go((), chosen + left, p)
            return
        wins, space = _winner_counts(len(left), limit)
        for local, c in wins.items():
            w = left[local - 1]
            go(tuple(q for q in left if q != w), chosen + (w,), p * Fraction(c, space))

    go(tuple(range(1, n + 1)), (), Fraction(1))
    return tally, 1


def _parallel_tally(n, z, limit):
    """``z`` independent tournaments; repeat winners are replaced.

    The replacement is the repeat winner's most recent opponent not yet
    chosen, then the other players by how late they were knocked out.
    """
    if not 1 <= z <= n:
        raise ValueError("need 1 <= z <= n")
    recs, space = _tournaments([1] * n, None, limit)
    if space ** z > limit:
        raise SizeError(f"{space ** z} joint assignments exceed the limit of {limit}")
    tally: dict = {}
    for combo in itertools.product(recs.items(), repeat=z):
        chosen = []
        mult = 1
        for (surv, beaten, out), c in combo:
            mult *= c
            w = surv[0]
            if w in chosen:
                pool = list(beaten) + [p for p, _ in out if p not in beaten]
                w = next(p for p in pool + list(range(1, n + 1)) if p not in chosen)
            chosen.append(w)
        key = tuple(chosen)
        tally[key] = tally.get(key, 0) + mult
    return tally, space ** z


def marginals(dist: Mapping) -> dict[int, Fraction]:
    """Per-player probability of appearing in a tuple-valued outcome."""
    out: dict[int, Fraction] = {}
    for outcome, pr in dist.items():
        for p in set(outcome):
            if p is not None:
                out[p] = out.get(p, 0) + pr
    return out
