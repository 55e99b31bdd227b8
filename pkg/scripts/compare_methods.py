"""Accuracy of every method at several label ratios (one table row per
method x ratio), on a synthetic preset or a dataset manifest."""
import argparse
import sys

from mgal.cli import build_dataset
from mgal.harness import ExperimentSpec, run_experiment


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dataset", default="synthetic:default", help="'synthetic:<preset>' or a manifest path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--ratios", default="0.1,0.2,0.3")
    p.add_argument("--out", default="compare_methods.tsv")
    args = p.parse_args(argv)

    ds = build_dataset(args.dataset, args.seed)
    methods = [("gcn_single", v) for v in range(ds.m)] + [(m, None) for m in ("gcn_m", "multi_gcn", "mgl", "mgal")]
    if ds.m < 2:
        methods = [mv for mv in methods if mv[0] != "mgal"]
    rows = ["method\tratio\tmean\tstd\truns"]
    for ratio in (float(r) for r in args.ratios.split(",")):
        for method, view in methods:
            spec = ExperimentSpec(method=method, view=view, ratio=ratio, runs=args.runs, base_seed=args.seed)
            res = run_experiment(ds, spec)
            label = f"gcn_single({view})" if view is not None else method
            rows.append(f"{label}\t{ratio}\t{res.mean:.6f}\t{res.std:.6f}\t{args.runs}")
            print(f"{label:>14} ratio {ratio}: {100 * res.mean:6.2f} +- {100 * res.std:.2f}", flush=True)
    with open(args.out, "w") as fh:
        fh.write("\n".join(rows) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
