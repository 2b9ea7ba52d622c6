"""Participant policies.

A strategy sees the world through a :class:`View`: the public bracket, the
accepted reveals so far, and the private values of itself and its coalition.
Anything else raises :class:`InformationLeak`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional


class InformationLeak(RuntimeError):
    """A strategy tried to read a value that is still hidden by its commitment."""


class StrategyError(ValueError):
    pass


class View:
    def __init__(self, election, secrets, insiders=frozenset()):
        self._election = election
        self._secrets = secrets  # shared wallet map: player -> {node: value}
        self._insiders = frozenset(insiders)

    @property
    def bracket(self):
        return self._election.bracket

    @property
    def now(self) -> int:
        return self._election.now

    @property
    def round(self) -> int:
        return self._election.round

    def revealed(self, round: Optional[int] = None) -> dict[int, int]:
        """Accepted reveal values of a round (current by default)."""
        if round is None:
            return self._election.stage_reveals()
        return {p: m.value for p, m in self._election.reveals.get(round, {}).items()}

    def occupant(self, node: int):
        return self._election.occupants.get(node)

    def secret_value(self, player: int, node: int) -> int:
        if player not in self._insiders:
            raise InformationLeak(f"value of player {player} at node {node} is hidden")
        return self._secrets[player][node]


@dataclass
class ValueContext:
    player: int
    node: int
    k: int
    round: int
    view: Optional[View] = None


@dataclass
class RevealContext:
    player: int
    round: int
    tick: int         # ticks elapsed in this stage, from 0
    last_tick: bool
    node: int
    side: str         # 'left' or 'right'
    l: int
    k: int
    own_value: int
    opponent: Optional[int]        # opponent player id, None for dummies/vacancies
    opponent_value: Optional[int]  # set once the opponent's reveal is accepted
    view: Optional[View] = None
    replay: bool = False

    def wins_with(self, opponent_value: int) -> bool:
        y = (self.own_value + opponent_value) % self.k
        return (y < self.l) if self.side == "left" else (y >= self.l)


class Strategy:
    name = "strategy"

    def choose_value(self, ctx: ValueContext) -> int:
        raise NotImplementedError

    def reveal(self, ctx: RevealContext) -> bool:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class Honest(Strategy):
    """Uniform values from a seeded generator; reveals at the first tick."""

    name = "honest"

    def __init__(self, seed=None, rng: Optional[random.Random] = None):
        # simulations hand every player of a trial one shared generator
        self.rng = rng if rng is not None else random.Random(seed)

    def choose_value(self, ctx):
        return self.rng.randrange(ctx.k)

    def reveal(self, ctx):
        return True


class WithholdIfLosing(Honest):
    """Waits for the opponent; reveals only a winning value, or blind at the last tick."""

    name = "withhold_if_losing"

    def reveal(self, ctx):
        if ctx.opponent_value is not None:
            return ctx.wins_with(ctx.opponent_value)
        return ctx.last_tick


class AlwaysWithhold(Honest):
    name = "always_withhold"

    def reveal(self, ctx):
        return False


class FixedValue(Strategy):
    name = "fixed_value"

    def __init__(self, value: int = 0):
        if value < 0:
            raise StrategyError("fixed value must be non-negative")
        self.value = value

    def choose_value(self, ctx):
        return self.value % ctx.k

    def reveal(self, ctx):
        return True

    def __repr__(self):
        return f"FixedValue({self.value})"


class Canary(Honest):
    """Tries to peek at the opponent's hidden value; the view must refuse."""

    name = "canary"

    def reveal(self, ctx):
        if ctx.opponent is not None and ctx.view is not None:
            ctx.view.secret_value(ctx.opponent, ctx.node)
        return True


class Scripted(Strategy):
    """Replays fixed per-round values and reveal decisions (for tests and figures).

    ``values`` maps round -> value, ``withhold`` is a set of rounds skipped.
    """

    name = "scripted"

    def __init__(self, values=None, withhold=(), default=0):
        self.values = dict(values or {})
        self.withhold = set(withhold)
        self.default = default

    def choose_value(self, ctx):
        return self.values.get(ctx.round, self.default) % ctx.k

    def reveal(self, ctx):
        return ctx.round not in self.withhold


# ------------------------------------------------------------------ coalition
@dataclass
class Coalition:
    members: frozenset
    target: Optional[int] = None  # honest player to hurt; None -> maximise own wins
    _plans: dict = field(default_factory=dict)

    def objective(self):
        if self.target is not None:
            return ("min", frozenset({self.target}))
        return ("max", self.members)


class CoalitionMember(Strategy):
    """Member of a fully-informed coalition playing a search-optimal policy.

    Committed values are arbitrary (0): the coalition can always reach any
    outcome of its own matches by withholding, and a value committed against
    an honest player cannot shift that player's odds.  Reveal decisions are
    taken jointly at the last tick, once honest reveals are visible, by
    exhaustive search over the continuation game.
    """

    name = "coalition_optimal"

    def __init__(self, coalition: Coalition):
        self.coalition = coalition

    def choose_value(self, ctx):
        return 0

    def reveal(self, ctx):
        if not ctx.last_tick:
            return False
        from . import oracle
        key = (id(ctx.view._election), ctx.round, ctx.replay)
        plan = self.coalition._plans.get(key)
        if plan is None:
            plan = oracle.best_reveal_set(ctx.view, self.coalition)
            self.coalition._plans[key] = plan
        return ctx.player in plan


def coalition_optimal(members, honest_target=None) -> dict[int, CoalitionMember]:
    c = Coalition(frozenset(members), honest_target)
    return {m: CoalitionMember(c) for m in c.members}


REGISTRY = {
    "honest": Honest,
    "withhold_if_losing": WithholdIfLosing,
    "always_withhold": AlwaysWithhold,
    "fixed_value": FixedValue,
    "canary": Canary,
}


def make(name: str, seed=None, rng=None, **params) -> Strategy:
    """Build a single-player strategy by name; ``fixed_value`` takes ``value``."""
    if name.startswith("fixed_value(") and name.endswith(")"):
        return FixedValue(int(name[len("fixed_value("):-1]))
    if name == "fixed_value":
        return FixedValue(int(params.get("value", 0)))
    if name == "coalition_optimal":
        raise StrategyError("coalition_optimal is built for a member set; use coalition_optimal()")
    try:
        cls = REGISTRY[name]
    except KeyError:
        raise StrategyError(f"unknown strategy {name!r}") from None
    return cls(seed, rng)
