"""Empirical size of the calibrated test over a bandwidth grid.

Desk scale by default (S1/S2, q=1, n=100, M=500, B=200, ~1 min); --full
sweeps all four scenarios, q=1..3 and n=100/250/500 at M=B=1000, which is
an overnight job.  One CSV per (scenario, q, n) lands in the output
directory.
"""

import argparse
import time
from pathlib import Path

import numpy as np

from dirgof import simsuite


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--full", action="store_true", help="full-scale sweep")
    parser.add_argument("--out-dir", default="results/size", type=Path)
    parser.add_argument("--seed", default=8, type=int)
    parser.add_argument("--workers", default=1, type=int)
    args = parser.parse_args()

    if args.full:
        scenarios, dims, sizes, trials, bootstrap = (
            ("S1", "S2", "S3", "S4"), (1, 2, 3), (100, 250, 500), 1000, 1000,
        )
    else:
        scenarios, dims, sizes, trials, bootstrap = (
            ("S1", "S2"), (1,), (100,), 500, 200,
        )
    grid = np.geomspace(0.1, 1.5, 20)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    for scenario_id in scenarios:
        for q in dims:
            for n in sizes:
                started = time.time()
                scenario = simsuite.make_scenario(scenario_id, q)
                trace = simsuite.significance_trace(
                    scenario, n=n, h_grid=grid, trials=trials, bootstrap=bootstrap,
                    seed=args.seed, workers=args.workers,
                )
                path = args.out_dir / f"size_{scenario_id}_q{q}_n{n}.csv"
                with open(path, "w", newline="\n") as stream:
                    trace.write_csv(stream)
                print(f"{path}  ({time.time() - started:.1f}s)")


if __name__ == "__main__":
    main()
