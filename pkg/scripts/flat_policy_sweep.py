#!/usr/bin/env python3
"""Freshness of the five flat policies as the network grows.

Sweeps n = 1..50 for two values of alpha = lambda_e / lambda_s and writes
a CSV plus one plot series per (policy, alpha).  Optionally adds Monte
Carlo columns with --cycles.
"""

import argparse
from pathlib import Path

from gossipfresh.experiments import ExperimentConfig, emit_plot_data, run_experiment

CONFIG = {
    "name": "flat_policies",
    "mode": "flat_sweep_n",
    "policies": ["DC_noRC", "DC_RC", "FC_noRC", "FC_sRC", "FC_allRC"],
    "rates": {"lambda_s": 1.0, "lambda_g": 1.0, "alpha": [0.1, 1.0]},
    "n_range": [1, 50],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=Path("out"))
    ap.add_argument("--cycles", type=int, help="add Monte Carlo columns with this many cycles")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    raw = dict(CONFIG, output=str(args.out_dir / "flat_policies.csv"))
    if args.cycles:
        raw["sim"] = {"cycles": args.cycles, "seed": args.seed}
    rows = run_experiment(ExperimentConfig.from_dict(raw))
    series = emit_plot_data(rows, out_dir=args.out_dir)
    print(f"{len(rows)} rows -> {raw['output']}")
    print(f"{len(series)} series files in {args.out_dir}")


if __name__ == "__main__":
    main()
