"""Coordinator state machine for one election.

Time is an integer tick counter.  Each phase has a deadline and messages are
accepted only while ``now < deadline``; ``close_*`` calls are rejected before
the deadline is reached.  Drivers move the clock with :meth:`Election.advance`.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from . import bracket as bk
from .commitment import DIGEST_SIZE, verify


class EngineError(RuntimeError):
    pass


class PhaseError(EngineError):
    pass


class Phase(enum.Enum):
    SIGNUP = "signup"
    COMMIT = "commit"
    REVEAL = "reveal"
    FINISHED = "finished"


COMMIT_MODES = ("chain", "per-round")
LIVENESS_MODES = ("dummy", "move-up")


@dataclass(frozen=True)
class EngineConfig:
    commit_mode: str = "chain"
    liveness: str = "dummy"
    # register and commit as one transaction; both are still counted as
    # protocol messages in message_stats
    merged_registration: bool = True
    signup_ticks: int = 1
    commit_ticks: int = 1
    round_ticks: int = 2
    stop_after_round: Optional[int] = None
    # diff the tree on every signup; simulations switch this off and rebuild once
    track_signup_costs: bool = True
    record_trace: bool = True

    def __post_init__(self):
        if self.commit_mode not in COMMIT_MODES:
            raise EngineError(f"commit_mode must be one of {COMMIT_MODES}")
        if self.liveness not in LIVENESS_MODES:
            raise EngineError(f"liveness must be one of {LIVENESS_MODES}")
        for name in ("signup_ticks", "commit_ticks", "round_ticks"):
            if getattr(self, name) < 1:
                raise EngineError(f"{name} must be at least 1")
        if self.stop_after_round is not None and self.stop_after_round < 1:
            raise EngineError("stop_after_round must be positive")


class Occupant(NamedTuple):
    kind: str  # "real" | "dummy" | "vacant"
    player: Optional[int] = None

    @property
    def is_real(self) -> bool:
        return self.kind == "real"

    def to_json(self):
        return {"kind": self.kind, "player": self.player}


VACANT = Occupant("vacant")


def Real(p: int) -> Occupant:
    return Occupant("real", p)


def Dummy(p: Optional[int]) -> Occupant:
    return Occupant("dummy", p)


class RevealMessage(NamedTuple):
    player: int
    round: int
    value: int
    salt: bytes
    next_commitment: Optional[bytes] = None


def resolve_match(left_value: Optional[int], right_value: Optional[int],
                  l: int, k: int) -> Optional[str]:
    """Winner side of a skewed game, given each side's accepted value.

    ``None`` stands for no valid reveal (dummies never reveal).  With both
    values the left side wins iff ``(a + b) mod k < l``.  Returns
    ``'left'``, ``'right'`` or ``None`` when neither side revealed.
    """
    if left_value is None and right_value is None:
        return None
    if right_value is None:
        return "left"
    if left_value is None:
        return "right"
    return "left" if (left_value + right_value) % k < l else "right"


@dataclass
class _Replay:
    node: int
    level: int
    candidates: dict  # side -> player id or None


@dataclass
class Election:
    config: EngineConfig = field(default_factory=EngineConfig)

    def __post_init__(self):
        self._bracket: Optional[bk.Bracket] = None
        self._roster: list[int] = []
        self._weights: list[int] = []
        self._stale = False
        self.phase = Phase.SIGNUP
        self.round = 0
        self.stage = "reveal"  # or "replay-commit" / "replay-reveal"
        self.now = 0
        self.deadline = self.config.signup_ticks
        self.keys: dict = {}  # registration key -> player id
        self.keys_issued: list[int] = []
        self.commitments: dict[int, Optional[bytes]] = {}
        self.committed: set[int] = set()
        self.disqualified: set[int] = set()
        self.reveals: dict[int, dict[int, RevealMessage]] = {}
        self.accepted: dict[int, int] = defaultdict(int)
        self.received: dict[int, int] = defaultdict(int)
        self.transactions: dict[int, int] = defaultdict(int)
        self.occupants: dict[int, Occupant] = {}
        # losers beaten on the way up, most recent first, per node
        self.beaten: dict[int, list[int]] = {}
        self.history: list[tuple] = []  # resolved matches, see match_log()
        self.trace: list[tuple[int, int, str, bool]] = []
        self.signup_costs: list[bk.SignupCost] = []
        self._match_of: dict[int, bk.Node] = {}
        self._replays: dict[int, _Replay] = {}
        self._replay_commit: dict[int, bytes] = {}
        self._replay_values: dict[int, int] = {}
        self._outcome: Optional[int] = None
        self._tracing = self.config.record_trace
        self._chain = self.config.commit_mode == "chain"
        # round accepting regular reveals (None in replay stages and outside REVEAL)
        self._live_round: Optional[int] = None
        self._bucket: dict = {}

    @property
    def bracket(self) -> Optional[bk.Bracket]:
        if self._stale:
            self._bracket = bk.build(self._weights, self._roster) if self._roster else None
            self._stale = False
        return self._bracket

    # ------------------------------------------------------------------ clock
    def advance(self, ticks: int = 1) -> None:
        self.now += ticks

    def advance_to_deadline(self) -> None:
        if self.now < self.deadline:
            self.now = self.deadline

    @property
    def open(self) -> bool:
        return self.now < self.deadline

    def _log(self, player, kind, ok, transaction=True):
        self.received[player] += 1
        if ok:
            self.accepted[player] += 1
            if transaction:
                self.transactions[player] += 1
        if self._tracing:
            self.trace.append((self.now, player, kind, ok))

    def _require(self, phase: Phase):
        if self.phase is not phase:
            raise PhaseError(f"expected phase {phase.value}, in {self.phase.value}")

    # ----------------------------------------------------------------- signup
    def register(self, weight: int, commitment: Optional[bytes] = None,
                 key=None) -> Optional[int]:
        """Sign up a player and return its id.

        ``commitment`` is required under merged registration.  A repeated
        ``key`` is rejected and disqualifies the earlier registration.
        Returns ``None`` when the message is rejected.
        """
        if self.phase is not Phase.SIGNUP or not self.open:
            return None
        if key is not None and key in self.keys:
            pid = self.keys[key]
            self._log(pid, "register", False)
            self.disqualified.add(pid)
            self.commitments[pid] = None
            return None
        if self.config.merged_registration and (commitment is None or len(commitment) != DIGEST_SIZE):
            return None
        pid = len(self.keys_issued) + 1
        self.keys_issued.append(pid)
        if self.config.track_signup_costs:
            self._bracket, cost = bk.signup_with_cost(self.bracket, weight, pid)
            self.signup_costs.append(cost)
        else:
            self._stale = True
        self._roster.append(pid)
        self._weights.append(weight)
        if key is not None:
            self.keys[key] = pid
        self._log(pid, "register", True)
        if self.config.merged_registration:
            self.commitments[pid] = commitment
            self.committed.add(pid)
            # the commitment rides in the registration transaction
            if self._tracing:
                self.trace.append((self.now, pid, "commit", True))
            self.received[pid] += 1
            self.accepted[pid] += 1
        else:
            self.commitments[pid] = None
        return pid

    def resign(self, player: int) -> bool:
        if self.phase is not Phase.SIGNUP or not self.open:
            return False
        if player not in self._roster:
            return False
        i = self._roster.index(player)
        self._roster[i], self._weights[i] = self._roster[-1], self._weights[-1]
        self._roster.pop()
        self._weights.pop()
        self._stale = True
        self.commitments.pop(player, None)
        self.committed.discard(player)
        self._log(player, "resign", True)
        return True

    def commit(self, player: int, commitment: bytes) -> bool:
        """Separate commitment message (only when registration is not merged)."""
        if self.phase is not Phase.COMMIT or not self.open:
            self._log(player, "commit", False)
            return False
        if player not in self.commitments:
            return False
        if player in self.committed:
            self._log(player, "commit", False)
            self.disqualified.add(player)
            self.commitments[player] = None
            return False
        ok = commitment is not None and len(commitment) == DIGEST_SIZE
        self._log(player, "commit", ok)
        if ok:
            self.commitments[player] = commitment
            self.committed.add(player)
        return ok

    def close_signup(self) -> None:
        self._require(Phase.SIGNUP)
        if self.open:
            raise PhaseError("signup deadline not reached")
        if self.bracket is None:
            raise EngineError("no players registered")
        for pid in self.disqualified:
            self.commitments[pid] = None
        self.occupants = {self.bracket.leaf_index[p]: Real(p) for p in self.bracket.players}
        self.beaten = {i: [] for i in self.occupants}
        if self.config.merged_registration:
            self._start_reveals()
        else:
            self.phase = Phase.COMMIT
            self.deadline = self.now + self.config.commit_ticks

    def close_commit(self) -> None:
        self._require(Phase.COMMIT)
        if self.open:
            raise PhaseError("commit deadline not reached")
        self._start_reveals()

    # ----------------------------------------------------------------- reveal
    @property
    def last_round(self) -> int:
        r = self.bracket.rounds
        if self.config.stop_after_round is not None:
            r = min(r, self.config.stop_after_round)
        return r

    def _start_reveals(self):
        if self.bracket.rounds == 0 or self.last_round == 0:
            self._finish()
            return
        self.phase = Phase.REVEAL
        self._begin_round(1)

    def _begin_round(self, j: int):
        self.round = j
        self.stage = "reveal"
        self.deadline = self.now + self.config.round_ticks
        self.reveals[j] = self._bucket = {}
        self._live_round = j
        self._match_of = {}
        for nd in self.bracket.matches_by_round[j - 1]:
            for child in (nd.left, nd.right):
                occ = self.occupants[child]
                if occ.kind == "real":
                    self._match_of[occ.player] = nd

    def current_match(self, player: int) -> Optional[bk.Node]:
        """Node whose match the player is due to play this round, if any."""
        if self.phase is not Phase.REVEAL:
            return None
        if self.stage == "reveal":
            return self._match_of.get(player)
        for rp in self._replays.values():
            if player in rp.candidates.values():
                return self.bracket.nodes[rp.node]
        return None

    @staticmethod
    def _needs_next(node: bk.Node) -> bool:
        # every match below the root is followed by another on the path
        return node.index != 1

    def submit_reveal(self, msg: RevealMessage) -> bool:
        """Validate and record a reveal; invalid ones are dismissed (False)."""
        pid = msg.player
        # common case: an in-time regular reveal that verifies
        if msg.round == self._live_round and self.now < self.deadline \
                and pid not in self.disqualified:
            node = self._match_of.get(pid)
            bucket = self._bucket
            record = self.commitments.get(pid)
            nxt = msg.next_commitment
            if node is not None and pid not in bucket and record is not None \
                    and (nxt is not None) == (node.index != 1) \
                    and verify(record, msg.value, msg.salt,
                               nxt if self._chain else None, node.k):
                bucket[pid] = msg
                self.commitments[pid] = nxt
                if self._tracing:
                    self.trace.append((self.now, pid, "reveal", True))
                self.received[pid] += 1
                self.accepted[pid] += 1
                self.transactions[pid] += 1
                return True
        if self.phase is not Phase.REVEAL or msg.round != self.round or not self.open \
                or self.stage == "replay-commit":
            self._log(pid, "reveal", False)
            return False
        node = self.current_match(pid)
        if node is None or pid in self.disqualified:
            self._log(pid, "reveal", False)
            return False
        replay = self.stage == "replay-reveal"
        record = self._replay_commit.get(pid) if replay else self.commitments.get(pid)
        if replay:
            seen = pid in self._replay_values
        else:
            seen = pid in self.reveals[self.round]
        if seen:
            # a second reveal in one round is dishonest
            self._log(pid, "reveal", False)
            self.disqualified.add(pid)
            self.reveals[self.round].pop(pid, None)
            self._replay_values.pop(pid, None)
            return False
        if record is None or (msg.next_commitment is not None) != self._needs_next(node):
            self._log(pid, "reveal", False)
            return False
        # chain mode binds the next link inside the digest; per-round mode and
        # replays carry it as a fresh commitment beside a single-link one
        bound = msg.next_commitment if (self.config.commit_mode == "chain" and not replay) else None
        if not verify(record, msg.value, msg.salt, bound, modulus=node.k):
            self._log(pid, "reveal", False)
            return False
        self._log(pid, "reveal", True)
        if replay:
            self._replay_values[pid] = msg.value
        else:
            self.reveals[self.round][pid] = msg
        self.commitments[pid] = msg.next_commitment
        return True

    def disqualify(self, player: int) -> None:
        """Exclude a player caught cheating elsewhere (e.g. a sibling tournament)."""
        self.disqualified.add(player)
        self.commitments[player] = None
        if self.round in self.reveals:
            self.reveals[self.round].pop(player, None)
        self._replay_values.pop(player, None)

    def submit_replay_commit(self, player: int, commitment: bytes) -> bool:
        ok = (self.phase is Phase.REVEAL and self.stage == "replay-commit" and self.open
              and player not in self.disqualified
              and any(player in rp.candidates.values() for rp in self._replays.values())
              and commitment is not None and len(commitment) == DIGEST_SIZE)
        if ok and player in self._replay_commit:
            self.disqualified.add(player)
            ok = False
        self._log(player, "replay_commit", ok)
        if ok:
            self._replay_commit[player] = commitment
        return ok

    def due(self) -> dict[int, bk.Node]:
        """Players expected to act in the current stage, with their match node."""
        if self.phase is not Phase.REVEAL:
            return {}
        if self.stage == "reveal":
            return {p: nd for p, nd in self._match_of.items() if p not in self.disqualified}
        return {p: self.bracket.nodes[i] for p, (i, _) in self.replay_candidates.items()
                if p not in self.disqualified}

    def opponent_of(self, player: int) -> Optional[int]:
        """Real opponent in the current stage; None against dummies and vacancies."""
        if self.stage == "reveal":
            nd = self._match_of.get(player)
            if nd is None:
                return None
            for child in (nd.left, nd.right):
                occ = self.occupants[child]
                if occ.is_real and occ.player != player:
                    return occ.player
            return None
        for rp in self._replays.values():
            c = rp.candidates
            if c["left"] == player:
                return c["right"]
            if c["right"] == player:
                return c["left"]
        return None

    def side_of(self, player: int) -> Optional[str]:
        if self.stage == "reveal":
            nd = self._match_of.get(player)
            if nd is None:
                return None
            occ = self.occupants[nd.left]
            return "left" if occ.is_real and occ.player == player else "right"
        for rp in self._replays.values():
            for side, p in rp.candidates.items():
                if p == player:
                    return side
        return None

    def stage_reveals(self) -> dict[int, int]:
        """Accepted values in the current stage."""
        if self.stage == "replay-reveal":
            return dict(self._replay_values)
        return {p: m.value for p, m in self.reveals.get(self.round, {}).items()}

    @property
    def replay_candidates(self) -> dict[int, tuple[int, int]]:
        """player -> (node index, level) for pending replays."""
        return {p: (rp.node, rp.level) for rp in self._replays.values()
                for p in rp.candidates.values() if p is not None}

    def close_round(self) -> None:
        self._require(Phase.REVEAL)
        if self.open:
            raise PhaseError("round deadline not reached")
        if self.stage == "reveal":
            failed = []
            occupants, beaten, history = self.occupants, self.beaten, self.history
            bucket, dq, j = self.reveals[self.round], self.disqualified, self.round
            move_up = self.config.liveness == "move-up"
            for nd in self.bracket.matches_by_round[j - 1]:
                left, right = occupants[nd.left], occupants[nd.right]
                m = bucket.get(left.player) if left.kind == "real" and left.player not in dq else None
                lv = None if m is None else m.value
                m = bucket.get(right.player) if right.kind == "real" and right.player not in dq else None
                rv = None if m is None else m.value
                if lv is not None and rv is not None:
                    # both revealed: the regular case, settled inline
                    if (lv + rv) % nd.k < nd.l:
                        win, lose, below = left, right, nd.left
                        side = "left"
                    else:
                        win, lose, below = right, left, nd.right
                        side = "right"
                    occupants[nd.index] = win
                    beaten[nd.index] = [lose.player] + beaten[below]
                    history.append((j, nd.index, 0, left, right, lv, rv, side))
                    continue
                side = resolve_match(lv, rv, nd.l, nd.k)
                if side is None and move_up:
                    failed.append(nd)
                    self._record(nd, 0, left, right, lv, rv, None)
                    continue
                self._settle(nd, side, lv, rv)
            for nd in failed:
                self._queue_replay(nd, 1)
            if self._replays:
                self._enter_replay()
                return
        elif self.stage == "replay-commit":
            self.stage = "replay-reveal"
            self.deadline = self.now + self.config.round_ticks
            return
        else:
            pending = list(self._replays.values())
            self._replays = {}
            for rp in pending:
                nd = self.bracket.nodes[rp.node]
                lp, rpl = rp.candidates["left"], rp.candidates["right"]
                lv = self._replay_values.get(lp) if lp is not None else None
                rv = self._replay_values.get(rpl) if rpl is not None else None
                if lp in self.disqualified:
                    lv = None
                if rpl in self.disqualified:
                    rv = None
                side = resolve_match(lv, rv, nd.l, nd.k)
                self._record(nd, rp.level, lp, rpl, lv, rv, side)
                if side is None:
                    self._queue_replay(nd, rp.level + 1)
                    continue
                winner = lp if side == "left" else rpl
                loser = rpl if side == "left" else lp
                # the revealed next commitment carries the winner upward
                self.occupants[nd.index] = Real(winner)
                self.beaten[nd.index] = ([loser] if loser is not None else []) + \
                    self.beaten[nd.left if side == "left" else nd.right]
            self._replay_commit = {}
            self._replay_values = {}
            if self._replays:
                self._enter_replay()
                return
        self._next_round()

    def _settle(self, nd: bk.Node, side: Optional[str], lv, rv):
        left, right = self.occupants[nd.left], self.occupants[nd.right]
        if side is None:
            win = Dummy(left.player) if left.player is not None else Dummy(right.player)
            if left.kind == "vacant" and right.kind == "vacant":
                win = VACANT
            self.occupants[nd.index] = win
            self.beaten[nd.index] = []
        else:
            if side == "left":
                win, lose, below = left, right, nd.left
            else:
                win, lose, below = right, left, nd.right
            self.occupants[nd.index] = win
            b = self.beaten[below]
            self.beaten[nd.index] = [lose.player] + b if lose.kind == "real" else list(b)
        self.history.append((self.round, nd.index, 0, left, right, lv, rv, side))

    def _record(self, nd, level, left, right, lv, rv, side):
        self.history.append((self.round, nd.index, level, left, right, lv, rv, side))

    def match_log(self) -> list[dict]:
        """Resolved matches in order; ``replay`` is 0 for regular matches."""
        def who(o):
            if isinstance(o, Occupant):
                return o.to_json()
            return None if o is None else {"kind": "real", "player": o}
        return [{"round": j, "node": i, "replay": lvl, "left": who(a), "right": who(b),
                 "left_value": lv, "right_value": rv, "winner": side}
                for j, i, lvl, a, b, lv, rv, side in self.history]

    def _queue_replay(self, nd: bk.Node, level: int):
        cand = {}
        for side, child in (("left", nd.left), ("right", nd.right)):
            hist = self.beaten.get(child, [])
            cand[side] = hist[level - 1] if level <= len(hist) else None
        if cand["left"] is None and cand["right"] is None:
            self.occupants[nd.index] = VACANT
            self.beaten[nd.index] = []
            return
        self._replays[nd.index] = _Replay(nd.index, level, cand)

    def _enter_replay(self):
        self._live_round = None
        self.stage = "replay-commit"
        self.deadline = self.now + self.config.round_ticks

    def _next_round(self):
        if self.round >= self.last_round:
            self._finish()
        else:
            self.stage = "reveal"
            self._begin_round(self.round + 1)

    def _finish(self):
        self.phase = Phase.FINISHED
        self._live_round = None
        self.stage = "done"
        self.deadline = self.now
        root = self.occupants.get(1)
        self._outcome = root.player if root is not None and root.is_real else None

    # ---------------------------------------------------------------- results
    def outcome(self) -> Optional[int]:
        if self.phase is not Phase.FINISHED:
            raise PhaseError("election has not finished")
        return self._outcome

    def survivors(self) -> list[Occupant]:
        """Occupants of the nodes decided in the last played round, left to right."""
        if self.phase is not Phase.FINISHED:
            raise PhaseError("election has not finished")
        j = self.last_round
        if j == 0:
            return [self.occupants[1]]
        alive = [nd for nd in self.bracket.matches_by_round[j - 1]]
        # nodes decided earlier whose parent match was never played
        for i in self.occupants:
            nd = self.bracket.nodes[i]
            parent = self.bracket.nodes.get(i // 2)
            if nd.height < j and parent is not None and parent.height > j:
                alive.append(nd)
        alive.sort(key=bk._inorder_key)
        return [self.occupants[nd.index] for nd in alive]

    def message_stats(self) -> dict:
        players = list(self.bracket.players) if self.bracket else []
        counts = {p: self.accepted.get(p, 0) for p in players}
        tx = {p: self.transactions.get(p, 0) for p in players}
        vals = list(counts.values())
        return {
            "convention": "merged" if self.config.merged_registration else "separate",
            "per_player": counts,
            "transactions": tx,
            "mean": sum(vals) / len(vals) if vals else 0.0,
            "max": max(vals, default=0),
        }

    def snapshot(self) -> dict:
        return {
            "phase": self.phase.value,
            "round": self.round,
            "stage": self.stage,
            "now": self.now,
            "deadline": self.deadline,
            "config": {k: getattr(self.config, k) for k in self.config.__dataclass_fields__},
            "bracket": self.bracket.to_dict() if self.bracket else None,
            "occupants": {str(i): o.to_json() for i, o in sorted(self.occupants.items())},
            "commitments": {str(p): (c.hex() if c else None) for p, c in sorted(self.commitments.items())},
            "disqualified": sorted(self.disqualified),
            "matches": self.match_log(),
            "messages": self.message_stats(),
            "outcome": self._outcome if self.phase is Phase.FINISHED else None,
        }

    def snapshot_json(self, **kw) -> str:
        s = self.snapshot()
        s["messages"] = {**s["messages"],
                         "per_player": {str(k): v for k, v in s["messages"]["per_player"].items()},
                         "transactions": {str(k): v for k, v in s["messages"]["transactions"].items()}}
        return json.dumps(s, **kw)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tick", "player", "kind", "accepted"])
        for row in self.trace:
            w.writerow([row[0], row[1], row[2], int(row[3])])
        return buf.getvalue()
