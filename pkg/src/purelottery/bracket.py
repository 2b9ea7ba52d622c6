"""Weighted single-elimination brackets.

Nodes are addressed by heap index (root 1, children ``2i`` and ``2i + 1``).
The tree is left-complete: with ``d = ceil(log2 n)`` the first ``2n - 2**d``
leaves sit at depth ``d`` and the rest at depth ``d - 1``, in registration
order left to right.  Every internal node carries ``k = l + r``, the summed
weight of its subtrees; its match is a skewed game the left side wins with
probability ``l / k``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Optional, Sequence


class BracketError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    index: int
    k: int
    l: int = 0
    r: int = 0
    player: Optional[int] = None  # set on leaves only
    height: int = 0  # round in which the node's match is played; 0 for leaves

    @property
    def is_leaf(self) -> bool:
        return self.player is not None

    @property
    def left(self) -> int:
        return 2 * self.index

    @property
    def right(self) -> int:
        return 2 * self.index + 1


def _leaf_slots(n: int) -> list[int]:
    """Heap indices of the leaves of the left-complete tree, left to right."""
    if n == 1:
        return [1]
    d = (n - 1).bit_length()  # ceil(log2 n) for n >= 2
    base = 1 << (d - 1)
    pairs = n - base
    slots = []
    for s in range(base):
        h = base + s
        if s < pairs:
            slots.extend((2 * h, 2 * h + 1))
        else:
            slots.append(h)
    return slots


@dataclass(frozen=True)
class Bracket:
    """Immutable tournament tree over players in leaf order."""

    players: tuple[int, ...]
    weights: tuple[int, ...]
    nodes: dict = field(compare=False, repr=False)

    def __eq__(self, other):
        if not isinstance(other, Bracket):
            return NotImplemented
        return self.players == other.players and self.weights == other.weights

    def __hash__(self):
        return hash((self.players, self.weights))

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def root(self) -> Node:
        return self.nodes[1]

    @property
    def total_weight(self) -> int:
        return self.root.k

    @cached_property
    def leaf_index(self) -> dict[int, int]:
        """player id -> heap index of its leaf"""
        return {nd.player: i for i, nd in self.nodes.items() if nd.is_leaf}

    @cached_property
    def leaves(self) -> list[Node]:
        return [self.nodes[self.leaf_index[p]] for p in self.players]

    @property
    def rounds(self) -> int:
        return self.root.height

    @cached_property
    def matches_by_round(self) -> list[list[Node]]:
        """``matches_by_round[j - 1]`` lists the nodes played in round ``j``, left to right."""
        out: list[list[Node]] = [[] for _ in range(self.rounds)]
        for i in sorted(self.nodes):
            nd = self.nodes[i]
            if not nd.is_leaf:
                out[nd.height - 1].append(nd)
        for lst in out:
            lst.sort(key=_inorder_key)
        return out

    def depth_of(self, player: int) -> int:
        return self.leaf_index[player].bit_length() - 1

    def weight_of(self, player: int) -> int:
        return self.nodes[self.leaf_index[player]].k

    @cached_property
    def paths(self) -> dict[int, tuple[Node, ...]]:
        out = {}
        for p, leaf in self.leaf_index.items():
            i = leaf // 2
            nodes = []
            while i >= 1:
                nodes.append(self.nodes[i])
                i //= 2
            out[p] = tuple(nodes)
        return out

    def path(self, player: int) -> list[Node]:
        """Internal nodes from the player's leaf up to the root (bottom-up)."""
        return list(self.paths[player])

    def moduli(self, player: int) -> list[int]:
        return [nd.k for nd in self.path(player)]

    def side_of(self, player: int, node: Node) -> str:
        """'left' or 'right': which subtree of ``node`` contains the player."""
        i = self.leaf_index[player]
        while i // 2 != node.index:
            i //= 2
            if i == 0:
                raise BracketError(f"player {player} is not below node {node.index}")
        return "left" if i == node.left else "right"

    def win_probability(self, player: int) -> Fraction:
        """Product of own-side fractions along the root path."""
        p = Fraction(1)
        i = self.leaf_index[player]
        while i > 1:
            parent = self.nodes[i // 2]
            side = parent.l if i % 2 == 0 else parent.r
            p *= Fraction(side, parent.k)
            i //= 2
        return p

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "total_weight": self.total_weight if self.n else 0,
            "rounds": self.rounds if self.n else 0,
            "nodes": [
                {"index": nd.index, "k": nd.k, "l": nd.l, "r": nd.r,
                 "height": nd.height, "player": nd.player}
                for _, nd in sorted(self.nodes.items())
            ],
            "leaves": [
                {"player": p, "weight": w, "index": self.leaf_index[p],
                 "depth": self.depth_of(p)}
                for p, w in zip(self.players, self.weights)
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _inorder_key(nd: Node) -> float:
    # position of a node's left edge, normalised to [0, 1)
    d = nd.index.bit_length() - 1
    return (nd.index - (1 << d)) / (1 << d)


EMPTY = None  # an empty bracket is represented by None


def build(weights: Sequence[int], players: Optional[Sequence[int]] = None) -> Bracket:
    """Left-complete bracket over ``weights`` in the given order.

    ``players`` defaults to ids ``1..n``.  Brackets are immutable, so equal
    inputs share one cached instance.
    """
    weights = tuple(int(w) for w in weights)
    players = tuple(range(1, len(weights) + 1)) if players is None else tuple(players)
    return _build(weights, players)


@lru_cache(maxsize=4096)
def _build(weights: tuple, players: tuple) -> Bracket:
    if not weights:
        raise BracketError("cannot build a bracket with no players")
    if any(w < 1 for w in weights):
        raise BracketError(f"weights must be positive integers: {weights}")
    if len(players) != len(weights):
        raise BracketError("players and weights differ in length")
    if len(set(players)) != len(players):
        raise BracketError("duplicate player ids")

    nodes: dict[int, Node] = {}
    for idx, p, w in zip(_leaf_slots(len(weights)), players, weights):
        nodes[idx] = Node(index=idx, k=w, player=p)
    # internal nodes, deepest first
    pending = sorted({i // 2 for i in nodes if i > 1}, reverse=True)
    while pending:
        nxt = set()
        for i in pending:
            a, b = nodes[2 * i], nodes[2 * i + 1]
            nodes[i] = Node(index=i, k=a.k + b.k, l=a.k, r=b.k,
                            height=1 + max(a.height, b.height))
            if i > 1:
                nxt.add(i // 2)
        pending = sorted(nxt - set(nodes), reverse=True)
    return Bracket(players=players, weights=weights, nodes=nodes)


@dataclass(frozen=True)
class SignupCost:
    """Node accounting for one signup, diffed by heap position.

    ``created`` counts positions that did not exist before, ``updated`` counts
    surviving positions whose weight sum changed and ``moved`` counts leaf
    positions whose occupant changed without a weight change.
    """

    created: int
    updated: int
    moved: int

    @property
    def touched(self) -> int:
        return self.created + self.updated


def diff_cost(old: Optional[Bracket], new: Bracket) -> SignupCost:
    before = {} if old is None else old.nodes
    created = updated = moved = 0
    for i, nd in new.nodes.items():
        prev = before.get(i)
        if prev is None:
            created += 1
        elif prev.k != nd.k:
            updated += 1
        elif prev.player != nd.player:
            moved += 1
    return SignupCost(created, updated, moved)


def signup(bracket: Optional[Bracket], weight: int,
           player: Optional[int] = None) -> tuple[Bracket, int]:
    """Append a player; returns the new bracket and the touched-node count."""
    new, cost = signup_with_cost(bracket, weight, player)
    return new, cost.touched


def signup_with_cost(bracket: Optional[Bracket], weight: int,
                     player: Optional[int] = None) -> tuple[Bracket, SignupCost]:
    if bracket is None:
        players, weights = (), ()
    else:
        players, weights = bracket.players, bracket.weights
    if player is None:
        player = max(players, default=0) + 1
    new = build(weights + (weight,), players + (player,))
    return new, diff_cost(bracket, new)


def resign(bracket: Bracket, player: int) -> Optional[Bracket]:
    """Remove ``player``; the last-registered player takes over the vacated slot."""
    if player not in bracket.players:
        raise BracketError(f"unknown player {player}")
    players, weights = list(bracket.players), list(bracket.weights)
    i = players.index(player)
    players[i], weights[i] = players[-1], weights[-1]
    players.pop()
    weights.pop()
    if not players:
        return None
    return build(weights, players)


def match_params(bracket: Bracket, node) -> tuple[int, int]:
    """Threshold ``l`` and modulus ``k`` of an internal node's match."""
    nd = bracket.nodes[node] if isinstance(node, int) else node
    if nd.is_leaf:
        raise BracketError(f"node {nd.index} is a leaf and hosts no match")
    return nd.l, nd.k


def from_dict(d: dict) -> Bracket:
    leaves = d["leaves"]
    return build([x["weight"] for x in leaves], [x["player"] for x in leaves])


def cumulative_touched(weights: Iterable[int]) -> list[SignupCost]:
    """Costs of signing up ``weights`` one at a time."""
    out = []
    b = None
    for w in weights:
        b, c = signup_with_cost(b, w)
        out.append(c)
    return out


def log2_factorial(n: int) -> float:
    return math.lgamma(n + 1) / math.log(2)
