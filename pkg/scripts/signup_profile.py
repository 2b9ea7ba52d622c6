"""Per-signup node accounting for sequential unit-weight signups.

Prints created / updated / moved per signup and the cumulative total
against log2(n!).
"""
import argparse

from purelottery import bracket as bk
from purelottery.harness import local_maxima


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    args = ap.parse_args()

    costs = bk.cumulative_touched([1] * args.n)
    print(f"{'signup':>6} {'created':>8} {'updated':>8} {'moved':>6} {'touched':>8} {'cum':>6} {'log2 i!':>8}")
    cum = 0
    for i, c in enumerate(costs, 1):
        cum += c.touched
        print(f"{i:>6} {c.created:>8} {c.updated:>8} {c.moved:>6} {c.touched:>8} {cum:>6} {bk.log2_factorial(i):>8.1f}")
    print("signups at local maxima of touched:", local_maxima([c.touched for c in costs]))
    print("signups at local maxima of moved:  ", local_maxima([c.moved for c in costs]))
    if args.n > 1:
        print(f"cumulative / log2(n!) = {cum / bk.log2_factorial(args.n):.3f}")


if __name__ == "__main__":
    main()
