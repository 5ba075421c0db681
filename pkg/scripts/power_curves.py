"""Power against n for every implemented test (no ties, effect 1 sigma).

    python scripts/power_curves.py --epsilon 1 --n 10,20,...,150 --trials 2000 > power.csv
"""
import argparse
import csv
import sys

from dpwilcoxon.cli import parse_list
from dpwilcoxon.experiments import TESTS, PowerConfig, power_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epsilon", type=float, default=1.0)
    ap.add_argument("--n", default="10,20,...,150")
    ap.add_argument("--tests", default=",".join(TESTS))
    ap.add_argument("--effect", type=float, default=1.0)
    ap.add_argument("--tie-fraction", type=float, default=0.0)
    ap.add_argument("--sidedness", default="two")
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--c", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    w = csv.writer(sys.stdout)
    w.writerow(["test", "n", "epsilon", "power", "stderr"])
    for test in parse_list(args.tests, str):
        eps = "public" if test == "public" else args.epsilon
        base = PowerConfig(n=1, epsilon=eps, effect=args.effect, tie_fraction=args.tie_fraction,
                           trials=args.trials, c=args.c, test=test, seed=args.seed,
                           sidedness=args.sidedness)
        for e in power_sweep({"n": parse_list(args.n, int)}, base, workers=args.workers):
            w.writerow([e.config.test, e.config.n, eps, e.power, e.stderr])
            sys.stdout.flush()


if __name__ == "__main__":
    main()
