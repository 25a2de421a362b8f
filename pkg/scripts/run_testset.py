"""Run one desk-scale test set and write results plus a success-frequency table.

    python3 scripts/run_testset.py 1 --out results/testset1.csv
    python3 scripts/run_testset.py 3 --sigma 1e-4 --algo bp,isd,irl1 --out results/t3.json
"""
import argparse
from pathlib import Path

from isd import bench


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("testset", choices=["1", "2", "3", "4", "5"])
    p.add_argument("--m-range")
    p.add_argument("--algo")
    p.add_argument("--sigma", type=float)
    p.add_argument("--reps", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", required=True)
    args = p.parse_args()

    overrides = {}
    if args.m_range:
        overrides["m_values"] = bench.parse_mrange(args.m_range)
    if args.algo:
        overrides["algos"] = tuple(args.algo.split(","))
    if args.sigma is not None:
        overrides["sigma"] = args.sigma
    if args.reps:
        overrides["reps"] = args.reps
    spec = bench.spec_for_testset(args.testset, **overrides)
    rows = bench.run_experiment(spec, jobs=args.jobs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bench.emit_results(rows, "json" if out.suffix == ".json" else "csv", out, spec)

    freq = bench.success_table(rows)
    print("m     " + "  ".join(f"{a:>5}" for a in spec.algos))
    for m in spec.m_values:
        print(f"{m:<5} " + "  ".join(f"{freq[(a, m)]:5.2f}" for a in spec.algos))


if __name__ == "__main__":
    main()
