"""Monte-Carlo leader frequencies against the exact distribution.

    python scripts/monte_carlo.py --n 64 --trials 100000 --commit per-round
"""
import argparse
import time

from purelottery.harness import TrialConfig, binomial_band, chi2_critical, run_trials


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--commit", choices=("chain", "per-round"), default="per-round")
    ap.add_argument("--mode", choices=("dummy", "move-up"), default="dummy")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    t0 = time.perf_counter()
    rep = run_trials(TrialConfig(n=args.n, trials=args.trials, seed=args.seed,
                                 commit_mode=args.commit, liveness=args.mode), jobs=args.jobs)
    took = time.perf_counter() - t0
    worst = max(abs(f - float(e)) for f, e in zip(rep.frequencies, rep.expected))
    band = binomial_band(1 / args.n, args.trials)
    crit = chi2_critical(args.n - 1)
    print(f"n={args.n} trials={args.trials} commit={args.commit} mode={args.mode}")
    print(f"max |freq - exact| = {worst:.5f}  (3-sigma band {band:.5f})")
    print(f"chi2 = {rep.chi_square:.2f}  (critical {crit:.2f} at alpha 1e-3, {args.n - 1} dof)")
    print(f"no leader: {rep.no_leader}   {took:.1f}s, {took / args.trials * 1e3:.2f} ms/trial")


if __name__ == "__main__":
    main()
