"""Run the acceptance criteria several times and tabulate runtimes against budgets."""
import argparse
import statistics

from qfound.acceptance import CRITERIA, run_criterion


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    print(f"{'crit':>4}  {'group':<9} {'median s':>9} {'budget s':>9}  status")
    for c in CRITERIA:
        times, ok = [], True
        for k in range(args.repeats):
            rep, elapsed = run_criterion(c, args.seed + k)
            times.append(elapsed)
            ok &= rep.ok
        print(f"{c.number:>4}  {c.group:<9} {statistics.median(times):9.3f} {c.budget_s:9.1f}  "
              f"{'pass' if ok else 'FAIL'}")


if __name__ == "__main__":
    main()
