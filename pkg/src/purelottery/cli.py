"""Command-line front end: ``run``, ``enumerate``, ``attack``, ``variants``, ``inspect``.

Exit codes: 0 success, 1 a check failed, 2 usage error.  Results go to
stdout (JSON with ``--json``), diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import bracket as bk
from . import oracle
from . import variants as vr
from .engine import EngineConfig
from .harness import (HarnessError, TrialConfig, check_message_bounds, derive_seed,
                      play_election, run_trials, _strategies_for)

VARIANT_NAMES = ("ranking", "early-stop", "sequential", "permutation", "parallel",
                 "aversion", "aversion-alt")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _frac(f: Fraction) -> dict:
    return {"num": f.numerator, "den": f.denominator}


def _weights(s: str) -> list[int]:
    try:
        out = [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"weights must be comma-separated integers: {s!r}")
    if not out or any(w < 1 for w in out):
        raise argparse.ArgumentTypeError("weights must be positive")
    return out


def _strategy_pairs(items: Sequence[str], n: int) -> list[str]:
    names = ["honest"] * n
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"--strategy expects id=name, got {item!r}")
        ids, name = item.split("=", 1)
        for part in ids.split(","):
            if "-" in part:
                a, b = part.split("-", 1)
                rng = range(int(a), int(b) + 1)
            else:
                rng = [int(part)]
            for p in rng:
                if not 1 <= p <= n:
                    raise UsageError(f"player {p} outside 1..{n}")
                names[p - 1] = name
    return names


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file whose keys mirror the flags")
    p.add_argument("--n", type=int)
    p.add_argument("--weights", type=_weights)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="emit JSON on stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="purelottery", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    r = sub.add_parser("run", help="Monte-Carlo trials of the election")
    _common(r)
    r.add_argument("--trials", type=int, default=1000)
    r.add_argument("--strategy", action="append", default=[], metavar="ID=NAME")
    r.add_argument("--mode", choices=("dummy", "move-up"), default="dummy")
    r.add_argument("--commit", choices=("chain", "per-round"), default="chain")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--check", action="store_true",
                   help="fail unless message bounds hold (n = 2^m, all honest)")
    r.add_argument("--timing", action="store_true", help="include wall time in the report")

    e = sub.add_parser("enumerate", help="exact honest distribution by brute force")
    _common(e)
    e.add_argument("--variant", choices=oracle.VARIANTS)
    e.add_argument("--z", type=int, default=1)

    a = sub.add_parser("attack", help="worst case against an honest player or a coalition's best")
    _common(a)
    g = a.add_mutually_exclusive_group(required=True)
    g.add_argument("--honest", type=int)
    g.add_argument("--coalition", help="comma-separated member ids")

    v = sub.add_parser("variants", help="run a protocol variant once")
    _common(v)
    v.add_argument("--variant", choices=VARIANT_NAMES, required=True)
    v.add_argument("--z", type=int, default=2)
    v.add_argument("--strategy", action="append", default=[], metavar="ID=NAME")

    i = sub.add_parser("inspect", help="dump the bracket and one seeded election")
    _common(i)
    i.add_argument("--mode", choices=("dummy", "move-up"), default="dummy")
    i.add_argument("--commit", choices=("chain", "per-round"), default="chain")
    i.add_argument("--strategy", action="append", default=[], metavar="ID=NAME")
    return ap


def _apply_config(ap, argv):
    """Re-parse with a JSON config as defaults so explicit flags win."""
    args = ap.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}")
    if "weights" in cfg and isinstance(cfg["weights"], str):
        cfg["weights"] = _weights(cfg["weights"])
    if "strategy" in cfg and isinstance(cfg["strategy"], dict):
        cfg["strategy"] = [f"{k}={v}" for k, v in cfg["strategy"].items()]
    sub = ap._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = set(cfg) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    sub.set_defaults(**cfg)
    return ap.parse_args(argv)


def _resolve_weights(args) -> list[int]:
    if args.weights is not None:
        if args.n is not None and args.n != len(args.weights):
            raise UsageError("--n disagrees with --weights")
        return list(args.weights)
    if args.n is None or args.n < 1:
        raise UsageError("give --n or --weights")
    return [1] * args.n


def _emit(obj, text: str, as_json: bool):
    print(json.dumps(obj, sort_keys=True) if as_json else text)


def _cmd_run(args) -> int:
    w = _resolve_weights(args)
    names = _strategy_pairs(args.strategy, len(w))
    cfg = TrialConfig(n=len(w), weights=tuple(w), strategies=tuple(names), trials=args.trials,
                      seed=args.seed, liveness=args.mode, commit_mode=args.commit)
    rep = run_trials(cfg, jobs=args.jobs)
    out = rep.to_dict(timing=args.timing)
    code = 0
    if args.check:
        res = check_message_bounds(rep, len(w))
        out["check"] = {"passed": res.passed, **res.detail}
        code = 0 if res.passed else 1
    text = rep.to_text()
    if args.check:
        text += f"\ncheck {'passed' if code == 0 else 'FAILED'}: {out['check']}"
    _emit(out, text, args.json)
    return code


def _cmd_enumerate(args) -> int:
    if args.variant is None:
        w = _resolve_weights(args)
        dist = oracle.enumerate_honest(w)
        total = sum(dist.values())
        out = {"weights": w, "distribution": {str(p): _frac(f) for p, f in dist.items()},
               "total": _frac(total)}
        text = "\n".join(f"{p:>4}  {f}" for p, f in dist.items())
        _emit(out, text, args.json)
        return 0 if total == 1 else 1
    if args.n is None:
        raise UsageError("variant enumeration needs --n")
    dist = oracle.enumerate_variant(args.variant, args.n, args.z)
    key = lambda o: o if isinstance(o, int) else ",".join(map(str, o))  # noqa: E731
    out = {"variant": args.variant, "n": args.n, "z": args.z,
           "distribution": {str(key(o)): _frac(f) for o, f in sorted(dist.items(), key=str)}}
    if args.variant != "aversion":
        out["marginals"] = {str(p): _frac(f) for p, f in sorted(oracle.marginals(
            {o if isinstance(o, tuple) else (o,): f for o, f in dist.items()}).items())}
    text = "\n".join(f"{key(o)!s:>12}  {f}" for o, f in sorted(dist.items(), key=str))
    _emit(out, text, args.json)
    return 0 if sum(dist.values()) == 1 else 1


def _cmd_attack(args) -> int:
    w = _resolve_weights(args)
    total = sum(w)
    if args.honest is not None:
        val = oracle.worst_case_honest(w, args.honest)
        fair = Fraction(w[args.honest - 1], total)
        ok = val >= fair
        out = {"weights": w, "honest": args.honest, "worst_case": _frac(val), "fair_share": _frac(fair),
               "passed": ok}
        text = f"player {args.honest}: worst case {val} (fair share {fair}) {'ok' if ok else 'VIOLATED'}"
    else:
        members = [int(x) for x in args.coalition.split(",") if x]
        val = oracle.coalition_best(w, members)
        fair = Fraction(sum(w[p - 1] for p in members), total)
        ok = val <= fair
        out = {"weights": w, "coalition": members, "best": _frac(val), "fair_share": _frac(fair),
               "passed": ok}
        text = f"coalition {members}: best {val} (fair share {fair}) {'ok' if ok else 'VIOLATED'}"
    _emit(out, text, args.json)
    return 0 if ok else 1


def _cmd_variants(args) -> int:
    n = args.n if args.n is not None else (len(args.weights) if args.weights else None)
    if n is None:
        raise UsageError("give --n")
    from .strategies import make
    import random
    rng = random.Random(derive_seed(args.seed, -1))
    names = _strategy_pairs(args.strategy, n)
    if "coalition_optimal" in names:
        raise UsageError("coalition strategies are not supported by the variants runner")
    strats = [make(nm, rng=rng) for nm in names]
    if args.variant == "ranking":
        res = vr.run_ranking(n, strats, args.seed)
        out = res.to_json()
        text = "ranking " + " ".join(map(str, res.order))
    elif args.variant in ("aversion", "aversion-alt"):
        res = vr.run_leader_aversion(n, strats, args.seed, alternative=args.variant == "aversion-alt")
        out = res.to_json()
        text = f"elected {list(res.elected)} cheaters {list(res.cheaters)}"
    else:
        res = vr.run_multi_leader(n, args.z, args.variant, strats, args.seed)
        out = res.to_json()
        text = f"{args.variant} leaders {list(res.leaders)}"
    _emit(out, text, args.json)
    return 0


def _who(o) -> str:
    if o is None or o["kind"] == "vacant":
        return "vacant"
    return f"{'dummy ' if o['kind'] == 'dummy' else ''}p{o['player']}"


def _val(v) -> str:
    return "withheld" if v is None else str(v)


def _cmd_inspect(args) -> int:
    w = _resolve_weights(args)
    br = bk.build(w)
    names = _strategy_pairs(args.strategy, len(w))
    cfg = TrialConfig(n=len(w), weights=tuple(w), strategies=tuple(names), trials=1, seed=args.seed,
                      liveness=args.mode, commit_mode=args.commit)
    ecfg = EngineConfig(commit_mode=args.commit, liveness=args.mode)
    el = play_election(w, _strategies_for(cfg, args.seed), ecfg, seed=args.seed)
    out = {"bracket": br.to_dict(), "moduli": {str(p): br.moduli(p) for p in br.players},
           "election": el.snapshot()}
    text = "\n".join([f"players {br.n}  rounds {br.rounds}  total weight {br.total_weight}"] +
                     [f"  player {p}: depth {br.depth_of(p)} moduli {br.moduli(p)}" for p in br.players] +
                     [f"leader {el.outcome()}"] +
                     [f"  r{m['round']} node {m['node']}: {_who(m['left'])}={_val(m['left_value'])} vs "
                      f"{_who(m['right'])}={_val(m['right_value'])} -> {m['winner'] or 'none revealed'}"
                      for m in el.match_log()])
    _emit(out, text, args.json)
    return 0


COMMANDS = {"run": _cmd_run, "enumerate": _cmd_enumerate, "attack": _cmd_attack,
            "variants": _cmd_variants, "inspect": _cmd_inspect}


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = _apply_config(ap, list(sys.argv[1:] if argv is None else argv))
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (oracle.SizeError, vr.VariantError, HarnessError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
