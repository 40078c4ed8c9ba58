"""Off-diagonal coherence of the system spin versus kicked sites, for a few kick angles."""
import argparse
import math

from qfound.hepplab import ChainState, reduced_coherence, reduced_coherence_trace


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sites", type=int, default=10)
    ap.add_argument("--c-plus", type=float, default=0.6)
    args = ap.parse_args()
    cm = math.sqrt(1 - args.c_plus ** 2)
    angles = [("pi/6", math.pi / 6), ("pi/3", math.pi / 3), ("pi/2", math.pi / 2), ("pi", math.pi)]
    print("  t " + "".join(f"{lab:>12}" for lab, _ in angles) + "   max |formula - trace|")
    for t in range(args.sites + 1):
        row, worst = [], 0.0
        for _, th in angles:
            s = ChainState(args.c_plus, cm, args.sites, th, t)
            c = reduced_coherence(s)
            worst = max(worst, abs(c - reduced_coherence_trace(s)))
            row.append(c)
        print(f"{t:3d} " + "".join(f"{x:12.3e}" for x in row) + f"   {worst:.1e}")


if __name__ == "__main__":
    main()
