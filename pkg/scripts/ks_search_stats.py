"""Coloring-search effort on the shipped ray sets under shuffled decision orders,
and which single-ray deletions make the 117-ray set colorable."""
import argparse
import statistics

from qfound.kslab import Ray, color_search, derive_structure, shipped_rays, shuffled_verdict


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--orders", type=int, default=20)
    ap.add_argument("--deletions", action="store_true", help="also try removing each ray in turn")
    args = ap.parse_args()
    for name in ("ks117.rays", "bug.rays"):
        g = derive_structure(shipped_rays(name).rays)
        runs = [shuffled_verdict(g, s) for s in range(args.orders)]
        verdicts = {v for v, _ in runs}
        nodes = [n for _, n in runs]
        _, base = color_search(g)
        print(f"{name}: colorable={sorted(verdicts)} ascending-order nodes={base} "
              f"shuffled median={statistics.median(nodes)} max={max(nodes)}")
    if args.deletions:
        rays = shipped_rays("ks117.rays").rays
        freed = []
        for r in rays:
            g = derive_structure([x for x in rays if x.id != r.id])
            if color_search(g)[0] is not None:
                freed.append(r.id)
        print(f"deleting any of {len(freed)} of {len(rays)} rays leaves a colorable set")


if __name__ == "__main__":
    main()
