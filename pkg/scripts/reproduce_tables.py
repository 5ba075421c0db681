"""Regenerate the critical value tables as CSV.

Writes comparison_n100.csv, comparison_n1000.csv (normalized, one-sided:
public / simulated / analytic bound) and critical_eps{1.0,0.1,0.01}.csv
(unnormalized, two-sided, n = 10..1000) into --out-dir.

    python scripts/reproduce_tables.py --out-dir results --c 10000000 --seed 1
"""
import argparse
import csv
from pathlib import Path

from dpwilcoxon.cache import ReferenceCache
from dpwilcoxon.experiments import comparison_table, critical_value_table

NS = [10, 20, 30, 40, 50, 100, 200, 300, 400, 500, 1000]
ALPHAS = [0.05, 0.025, 0.01, 0.005]


def write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--c", type=int, default=10_000_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--cache-dir")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    provider = ReferenceCache(args.cache_dir).provider if args.cache_dir else None

    for n in (100, 1000):
        rows = comparison_table(n, [1.0, 0.1, 0.01], [0.1, 0.05, 0.025], args.c, rng=args.seed,
                                ref_provider=provider)
        write(out / f"comparison_n{n}.csv", ["epsilon", "alpha", "public", "new", "tc"],
              [[r.epsilon, r.alpha, f"{r.public:.3f}", f"{r.new:.3f}", f"{r.tc:.3f}"] for r in rows])

    for eps in (1.0, 0.1, 0.01):
        rows = critical_value_table([eps], NS, ALPHAS, args.c, "two", rng=args.seed, ref_provider=provider)
        write(out / f"critical_eps{eps}.csv", ["epsilon", "n", "alpha", "critical_value"],
              [[r.epsilon, r.n, r.alpha, round(r.critical_value)] for r in rows])


if __name__ == "__main__":
    main()
