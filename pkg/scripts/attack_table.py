"""Exact worst case for each honest position and best value of each coalition."""
import argparse
import itertools

from purelottery import oracle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--weights", default="1,1,1,1", help="comma separated, at most 4 players is quick")
    args = ap.parse_args()
    ws = [int(w) for w in args.weights.split(",")]
    total = sum(ws)

    print("honest player   fair share   worst case")
    for p in range(1, len(ws) + 1):
        print(f"{p:>13}   {ws[p - 1]}/{total:<9} {oracle.worst_case_honest(ws, p)}")
    print("\ncoalition       weight share   best value")
    for t in range(1, len(ws)):
        for c in itertools.combinations(range(1, len(ws) + 1), t):
            share = sum(ws[p - 1] for p in c)
            print(f"{','.join(map(str, c)):>9}       {share}/{total:<11} {oracle.coalition_best(ws, c)}")


if __name__ == "__main__":
    main()
