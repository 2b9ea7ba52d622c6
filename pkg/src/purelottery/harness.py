"""Drive elections with strategies and collect Monte-Carlo statistics."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import random
import time
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from typing import Optional, Sequence

from . import bracket as bk
from . import strategies as st
from .commitment import SALT_SIZE, build_chain, commit
from .engine import EngineConfig, Election, Phase, RevealMessage


class HarnessError(ValueError):
    pass


def derive_seed(master: int, *parts: int) -> int:
    h = hashlib.sha256(int(master).to_bytes(16, "big", signed=True))
    for p in parts:
        h.update(int(p).to_bytes(16, "big", signed=True))
    return int.from_bytes(h.digest()[:8], "big")


class _Wallet:
    """One player's secrets, keyed by node index."""
    __slots__ = ("values", "salts", "links")

    def __init__(self):
        self.values: dict[int, int] = {}
        self.salts: dict[int, bytes] = {}
        self.links: dict[int, bytes] = {}


def play_election(weights: Sequence[int], strategies: Sequence, config: EngineConfig = EngineConfig(),
                  seed: int = 0, election: Optional[Election] = None) -> Election:
    """Run one election to completion; returns the finished :class:`Election`.

    ``strategies[i]`` plays for player ``i + 1``.  Participants derive their
    path moduli from the full roster, which drivers know in advance.
    """
    if len(strategies) != len(weights):
        raise HarnessError("need one strategy per player")
    el = election if election is not None else Election(config)
    config = el.config
    final = bk.build(weights)
    pids = list(final.players)
    strat = dict(zip(pids, strategies))
    salt_rng = random.Random(seed)
    wallets = {p: _Wallet() for p in pids}
    secrets = {p: wallets[p].values for p in pids}
    views: dict[int, st.View] = {}

    def view(p):
        if p not in views:
            insiders = {p}
            if isinstance(strat[p], st.CoalitionMember):
                insiders |= set(strat[p].coalition.members)
            views[p] = st.View(el, secrets, insiders)
        return views[p]
    chain = config.commit_mode == "chain"

    # players that always reveal at once skip the per-tick context
    eager = {p for p in pids if type(strat[p]).reveal is st.Honest.reveal}
    # plain uniform draws skip the context object
    uniform = {p for p in pids if type(strat[p]).choose_value is st.Honest.choose_value}
    if election is None and len(eager) == len(uniform) == len(pids) and eager == uniform:
        return _play_plain(el, final, pids, weights, strat, salt_rng)
    draw = {p: strat[p].rng.randrange for p in uniform}
    # salts are cut from a pool refilled in bulk
    pool = [b"", 0]

    def salt():
        buf, at = pool
        if at == len(buf):
            buf, at = salt_rng.randbytes(SALT_SIZE * 256), 0
            pool[0] = buf
        pool[1] = at + SALT_SIZE
        return buf[at:at + SALT_SIZE]

    def choose(p, nd):
        i = nd.index
        d = draw.get(p)
        if d is not None:
            v = d(nd.k)
        else:
            v = strat[p].choose_value(st.ValueContext(p, i, nd.k, nd.height, view(p)))
        w = wallets[p]
        w.values[i] = v
        w.salts[i] = salt()
        return v

    def fresh_head(p, nodes):
        """Commitment covering ``nodes`` (bottom-up) in the configured style."""
        w = wallets[p]
        if not nodes:
            return None
        if chain:
            vals = [choose(p, nd) for nd in nodes]
            links = build_chain(vals, [w.salts[nd.index] for nd in nodes])
            for nd, h in zip(nodes, links):
                w.links[nd.index] = h
            return links[0]
        nd = nodes[0]
        return commit(choose(p, nd), w.salts[nd.index])

    heads = {}
    for p in pids:
        path = final.paths[p]
        if path:
            heads[p] = fresh_head(p, path)
        else:
            w = wallets[p]
            heads[p] = commit(0, salt())
    for p, wgt in zip(pids, weights):
        got = el.register(wgt, heads[p] if config.merged_registration else None)
        if got != p:
            raise HarnessError(f"registration of player {p} returned {got}")
    el.advance_to_deadline()
    el.close_signup()
    if el.phase is Phase.COMMIT:
        for p in pids:
            el.commit(p, heads[p])
        el.advance_to_deadline()
        el.close_commit()

    ticks = config.round_ticks
    nodes = final.nodes
    submit = el.submit_reveal

    def ancestors(i):
        out = []
        i >>= 1
        while i:
            out.append(nodes[i])
            i >>= 1
        return out
    while el.phase is Phase.REVEAL:
        if el.stage == "replay-commit":
            for p, nd in el.due().items():
                choose(p, nd)
                w = wallets[p]
                el.submit_replay_commit(p, commit(w.values[nd.index], w.salts[nd.index]))
            el.advance_to_deadline()
            el.close_round()
            continue
        replay = el.stage == "replay-reveal"
        rnd = el.round
        due = el.due()
        done: set[int] = set()
        info = {}
        lazy = [p for p in due if p not in eager]
        for t in range(ticks):
            if len(done) == len(due):
                break
            last = t == ticks - 1
            public = el.stage_reveals() if t else {}
            if not lazy:
                go = list(due.items())
            else:
                go = [(p, due[p]) for p in due if p in eager and p not in done]
            for p in lazy:
                if p in done:
                    continue
                nd = due[p]
                if p not in info:
                    info[p] = (el.side_of(p), el.opponent_of(p))
                side, opp = info[p]
                ctx = st.RevealContext(
                    player=p, round=el.round, tick=t, last_tick=last, node=nd.index,
                    side=side, l=nd.l, k=nd.k, own_value=wallets[p].values[nd.index],
                    opponent=opp, opponent_value=public.get(opp) if opp is not None else None,
                    view=view(p), replay=replay)
                if strat[p].reveal(ctx):
                    go.append((p, nd))
            for p, nd in go:
                done.add(p)
                w = wallets[p]
                i = nd.index
                if i == 1:
                    nxt = None
                elif chain and not replay:
                    nxt = w.links[i >> 1]
                elif not chain:
                    up = nodes[i >> 1]
                    nxt = commit(choose(p, up), w.salts[up.index])
                else:
                    nxt = fresh_head(p, ancestors(i))
                submit(RevealMessage(p, rnd, w.values[i], w.salts[i], nxt))
            el.advance(1)
        el.advance_to_deadline()
        el.close_round()
    return el


def _play_plain(el: Election, final: bk.Bracket, pids, weights, strat, salt_rng) -> Election:
    """All players draw uniformly and reveal at once.

    Sends the same messages and consumes the same random draws, in the same
    order, as the general driver; it only skips the per-tick contexts.
    """
    config = el.config
    chain = config.commit_mode == "chain"
    # randrange(k) is _randbelow(k) for k >= 1; calling it directly draws the same numbers
    draw = {p: getattr(strat[p].rng, "_randbelow", strat[p].rng.randrange) for p in pids}
    vals = {p: {} for p in pids}
    salts = {p: {} for p in pids}
    links = {p: {} for p in pids}
    pool = [b"", 0]

    def salt():
        buf, at = pool
        if at == len(buf):
            buf, at = salt_rng.randbytes(SALT_SIZE * 256), 0
            pool[0] = buf
        pool[1] = at + SALT_SIZE
        return buf[at:at + SALT_SIZE]

    heads = []
    for p in pids:
        path = final.paths[p]
        d, pv, ps = draw[p], vals[p], salts[p]
        if not path:
            heads.append(commit(0, salt()))
            continue
        for nd in (path if chain else path[:1]):
            pv[nd.index] = d(nd.k)
            ps[nd.index] = salt()
        if chain:
            hs = build_chain([pv[nd.index] for nd in path], [ps[nd.index] for nd in path])
            links[p].update((nd.index, h) for nd, h in zip(path, hs))
            heads.append(hs[0])
        else:
            i = path[0].index
            heads.append(commit(pv[i], ps[i]))
    merged = config.merged_registration
    for p, wgt, h in zip(pids, weights, heads):
        if el.register(wgt, h if merged else None) != p:
            raise HarnessError(f"registration of player {p} failed")
    el.advance_to_deadline()
    el.close_signup()
    if el.phase is Phase.COMMIT:
        for p, h in zip(pids, heads):
            el.commit(p, h)
        el.advance_to_deadline()
        el.close_commit()

    nodes = final.nodes
    submit = el.submit_reveal
    while el.phase is Phase.REVEAL:
        if el.stage != "reveal":
            raise HarnessError("replay stage reached although every player reveals")
        rnd = el.round
        for p, nd in el.due().items():
            i = nd.index
            if i == 1:
                nxt = None
            elif chain:
                nxt = links[p][i >> 1]
            else:
                up = i >> 1
                v = draw[p](nodes[up].k)
                buf, at = pool
                if at == len(buf):
                    buf, at = salt_rng.randbytes(SALT_SIZE * 256), 0
                    pool[0] = buf
                pool[1] = at + SALT_SIZE
                s = buf[at:at + SALT_SIZE]
                vals[p][up], salts[p][up] = v, s
                nxt = commit(v, s)
            submit(RevealMessage(p, rnd, vals[p][i], salts[p][i], nxt))
        el.advance_to_deadline()
        el.close_round()
    return el


# ------------------------------------------------------------------ trials
@dataclass(frozen=True)
class TrialConfig:
    n: int
    weights: Optional[tuple] = None
    strategies: Optional[tuple] = None  # names per player, default all honest
    variant: Optional[str] = None       # reserved for the variants runner
    trials: int = 1000
    seed: int = 0
    liveness: str = "dummy"
    commit_mode: str = "chain"
    merged_registration: bool = True
    round_ticks: int = 2
    z: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise HarnessError("n must be positive")
        if self.trials < 1:
            raise HarnessError("trials must be at least 1")
        if self.weights is not None and len(self.weights) != self.n:
            raise HarnessError("weights length must equal n")
        if self.strategies is not None and len(self.strategies) != self.n:
            raise HarnessError("strategy list length must equal n")

    @property
    def weight_list(self) -> list[int]:
        return list(self.weights) if self.weights is not None else [1] * self.n

    @property
    def strategy_names(self) -> list[str]:
        return list(self.strategies) if self.strategies is not None else ["honest"] * self.n

    def engine_config(self) -> EngineConfig:
        return EngineConfig(commit_mode=self.commit_mode, liveness=self.liveness,
                            merged_registration=self.merged_registration,
                            round_ticks=self.round_ticks, track_signup_costs=False,
                            record_trace=False)


@dataclass
class TrialReport:
    trials: int
    wins: list[int]
    no_leader: int
    message_mean: list[float]
    message_max: list[int]
    messages_total_mean: float
    messages_total_max: int
    convention: str
    signup_touched: list[int]
    signup_created: list[int]
    expected: list[Fraction]
    chi_square: float
    winners: list[Optional[int]] = field(default_factory=list, repr=False)
    wall_time: float = field(default=0.0, compare=False)

    @property
    def frequencies(self) -> list[float]:
        return [w / self.trials for w in self.wins]

    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "trials": self.trials,
            "wins": self.wins,
            "no_leader": self.no_leader,
            "frequencies": self.frequencies,
            "expected": [{"num": f.numerator, "den": f.denominator} for f in self.expected],
            "chi_square": self.chi_square,
            "messages": {"convention": self.convention, "mean": self.messages_total_mean,
                         "max": self.messages_total_max,
                         "per_player_mean": self.message_mean,
                         "per_player_max": self.message_max},
            "signup": {"touched": self.signup_touched, "created": self.signup_created},
        }
        if timing:
            d["wall_time"] = self.wall_time
        return d

    def to_json(self, timing: bool = False, **kw) -> str:
        return json.dumps(self.to_dict(timing), **kw)

    def to_text(self) -> str:
        lines = [f"trials {self.trials}   no-leader {self.no_leader}   chi2 {self.chi_square:.3f}",
                 f"{'player':>6} {'wins':>8} {'freq':>9} {'expected':>9} {'msg mean':>9} {'msg max':>8}"]
        for i, w in enumerate(self.wins):
            lines.append(f"{i + 1:>6} {w:>8} {w / self.trials:>9.5f} {float(self.expected[i]):>9.5f} "
                         f"{self.message_mean[i]:>9.3f} {self.message_max[i]:>8}")
        lines.append(f"messages ({self.convention}): mean {self.messages_total_mean:.4f} "
                     f"max {self.messages_total_max}")
        return "\n".join(lines)

    def winners_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "winner"])
        for i, p in enumerate(self.winners):
            w.writerow([i, "" if p is None else p])
        return buf.getvalue()


def _strategies_for(cfg: TrialConfig, trial_seed: int) -> list:
    out = []
    rng = random.Random(derive_seed(trial_seed, 0))
    coalition_members = [i + 1 for i, s in enumerate(cfg.strategy_names) if s == "coalition_optimal"]
    shared = st.coalition_optimal(coalition_members) if coalition_members else {}
    for i, name in enumerate(cfg.strategy_names):
        pid = i + 1
        if name == "coalition_optimal":
            out.append(shared[pid])
        else:
            out.append(st.make(name, rng=rng))
    return out


def _run_chunk(args) -> dict:
    cfg, start, stop = args
    n = cfg.n
    wins = [0] * n
    msum = [0] * n
    mmax = [0] * n
    winners = []
    no_leader = 0
    conv = "merged" if cfg.merged_registration else "separate"
    weights = cfg.weight_list
    ecfg = cfg.engine_config()
    for t in range(start, stop):
        ts = derive_seed(cfg.seed, t)
        el = play_election(weights, _strategies_for(cfg, ts), ecfg, seed=ts)
        leader = el.outcome()
        winners.append(leader)
        if leader is None:
            no_leader += 1
        else:
            wins[leader - 1] += 1
        for p, c in el.accepted.items():
            msum[p - 1] += c
            if c > mmax[p - 1]:
                mmax[p - 1] = c
    return {"wins": wins, "msum": msum, "mmax": mmax, "winners": winners,
            "no_leader": no_leader, "convention": conv}


def _merge(parts: list[dict]) -> dict:
    out = parts[0]
    for p in parts[1:]:
        out = {
            "wins": [a + b for a, b in zip(out["wins"], p["wins"])],
            "msum": [a + b for a, b in zip(out["msum"], p["msum"])],
            "mmax": [max(a, b) for a, b in zip(out["mmax"], p["mmax"])],
            "winners": out["winners"] + p["winners"],
            "no_leader": out["no_leader"] + p["no_leader"],
            "convention": out["convention"],
        }
    return out


def chi_square(counts: Sequence[int], expected: Sequence[Fraction], trials: int) -> float:
    stat = 0.0
    for c, p in zip(counts, expected):
        e = trials * float(p)
        if e > 0:
            stat += (c - e) ** 2 / e
    return stat


def chi2_critical(dof: int, alpha: float = 1e-3) -> float:
    """Upper critical value of the chi-square distribution."""
    from scipy.stats import chi2
    return float(chi2.isf(alpha, dof))


def binomial_band(p: float, trials: int, sigmas: float = 3.0) -> float:
    """Half-width ``sigmas * sqrt(p (1 - p) / trials)`` of a frequency band."""
    return sigmas * math.sqrt(p * (1 - p) / trials)


def run_trials(cfg: TrialConfig, jobs: int = 1) -> TrialReport:
    """Execute ``cfg.trials`` seeded elections.

    Trial ``t`` uses seed ``derive_seed(cfg.seed, t)`` so the outcome of a
    trial does not depend on how many trials run or how they are chunked.
    """
    if cfg.variant is not None:
        raise HarnessError("variants run through purelottery.variants")
    t0 = time.perf_counter()
    jobs = max(1, int(jobs))
    if jobs == 1:
        merged = _run_chunk((cfg, 0, cfg.trials))
    else:
        import multiprocessing as mp
        step = math.ceil(cfg.trials / jobs)
        chunks = [(cfg, s, min(cfg.trials, s + step)) for s in range(0, cfg.trials, step)]
        with mp.Pool(jobs) as pool:
            merged = _merge(pool.map(_run_chunk, chunks))
    b = bk.build(cfg.weight_list)
    expected = [b.win_probability(p) for p in b.players]
    costs = bk.cumulative_touched(cfg.weight_list)
    total = cfg.n * cfg.trials
    return TrialReport(
        trials=cfg.trials,
        wins=merged["wins"],
        no_leader=merged["no_leader"],
        message_mean=[s / cfg.trials for s in merged["msum"]],
        message_max=merged["mmax"],
        messages_total_mean=sum(merged["msum"]) / total,
        messages_total_max=max(merged["mmax"]),
        convention=merged["convention"],
        signup_touched=[c.touched for c in costs],
        signup_created=[c.created for c in costs],
        expected=expected,
        chi_square=chi_square(merged["wins"], expected, cfg.trials),
        winners=merged["winners"],
        wall_time=time.perf_counter() - t0,
    )


# ------------------------------------------------------------------ checks
@dataclass
class CheckResult:
    passed: bool
    detail: dict

    def __bool__(self):
        return self.passed


def check_message_bounds(report: TrialReport, n: int) -> CheckResult:
    """Mean below 4 and maximum exactly ``m + 2`` for ``n = 2**m``."""
    if n < 2 or n & (n - 1):
        raise HarnessError("message bounds are stated for n = 2**m")
    if report.convention != "merged":
        return CheckResult(False, {"error": f"expected merged convention, got {report.convention}"})
    m = n.bit_length() - 1
    detail = {"m": m, "mean": report.messages_total_mean, "max": report.messages_total_max,
              "expected_max": m + 2}
    ok = report.messages_total_mean < 4 and report.messages_total_max == m + 2
    return CheckResult(ok, detail)


EXPECTED_PEAKS = (3, 5, 9, 17, 33)


def local_maxima(xs: Sequence[int]) -> list[int]:
    """1-based positions strictly above both neighbours (edges need one neighbour)."""
    out = []
    for i, x in enumerate(xs):
        left = xs[i - 1] if i > 0 else None
        right = xs[i + 1] if i + 1 < len(xs) else None
        if left is None or right is None:
            continue
        if x > left and x > right:
            out.append(i + 1)
    return out


def check_signup_cost(costs: Sequence[bk.SignupCost], c: float = 2.0) -> CheckResult:
    """Per-signup O(log i) bound and creation peaks just after powers of two."""
    touched = [x.touched for x in costs]
    created = [x.created for x in costs]
    n = len(costs)
    bound_ok = all(t <= c * (int(math.log2(i)) + 2) for i, t in enumerate(touched, start=1))
    peaks = local_maxima(created)
    want = [p for p in EXPECTED_PEAKS if p < n]
    peaks_ok = peaks == want if n >= 34 else set(peaks) <= set(want)
    cum = sum(touched)
    ratio = cum / bk.log2_factorial(n) if n > 1 else float("inf")
    detail = {"bound_ok": bound_ok, "c": c, "creation_peaks": peaks, "expected_peaks": want,
              "peaks_ok": peaks_ok, "cumulative_touched": cum, "log2_factorial": bk.log2_factorial(n),
              "ratio": ratio,
              "moved_peaks": local_maxima([x.moved for x in costs])}
    return CheckResult(bound_ok and peaks_ok, detail)
