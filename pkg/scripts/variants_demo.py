"""Empirical behaviour of the variants under a random mix of strategies."""
import argparse
import random
from collections import Counter

from purelottery import strategies as st
from purelottery import variants as vr

POOL = (st.Honest, st.AlwaysWithhold, st.WithholdIfLosing)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--z", type=int, default=2)
    ap.add_argument("--runs", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)

    def mix():
        return [rng.choice(POOL)(rng=rng) for _ in range(args.n)]

    for scheme in vr.SCHEMES:
        firsts, dup = Counter(), 0
        for s in range(args.runs):
            ls = vr.run_multi_leader(args.n, args.z, scheme, mix(), seed=s).leaders
            real = [x for x in ls if x is not None]
            dup += len(set(real)) != len(real)
            firsts[ls[0]] += 1
        print(f"{scheme:>12}: runs with a repeated leader {dup}, first slot {dict(sorted(firsts.items(), key=str))}")

    tops = Counter(vr.run_ranking(args.n, seed=s).order[0] for s in range(args.runs))
    print(f"{'ranking':>12}: honest top spot {dict(sorted(tops.items()))}")
    sizes = Counter(len(vr.run_leader_aversion(args.n, mix(), seed=s, alternative=True).elected)
                    for s in range(args.runs))
    print(f"{'aversion-alt':>12}: elected-set sizes {dict(sorted(sizes.items()))}")


if __name__ == "__main__":
    main()
