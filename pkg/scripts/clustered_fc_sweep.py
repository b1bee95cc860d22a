#!/usr/bin/env python3
"""Cluster-size study for gossiping clusters, n = 120.

Sweeps the cluster size for the three (source, cluster) pairs whose
clusters are fully connected, across the default rate cases, then prints
the optimal-k report.
"""

import argparse
from pathlib import Path

from gossipfresh.experiments import (
    ExperimentConfig,
    emit_plot_data,
    report_optimal_k,
    run_experiment,
)

CONFIG = {
    "name": "clustered_fc",
    "mode": "clustered_sweep_k",
    "policies": [
        ["DC_noRC", "FC_noRC"],
        ["DC_RC", "FC_noRC"],
        ["DC_RC", "FC_allRC"],
    ],
    "n": 120,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=Path("out"))
    args = ap.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    config = ExperimentConfig.from_dict(
        dict(CONFIG, output=str(args.out_dir / "clustered_fc.csv"))
    )
    rows = run_experiment(config)
    series = emit_plot_data(rows, out_dir=args.out_dir)
    print(f"{len(rows)} rows -> {config.output}")
    print(f"{len(series)} series files in {args.out_dir}")
    for note in report_optimal_k(config).notes:
        print(note)


if __name__ == "__main__":
    main()
