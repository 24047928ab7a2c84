#!/usr/bin/env python3
"""Run a small experiment matrix and print the aggregated report.

One matrix cell per (dynamics, family, seed); every method in a cell shares
the identical dataset. Results aggregate into per-cell seed means, the same
machinery the `dynetforge matrix` command drives from a JSON spec file.
"""

import time

from dynetforge import run_experiment_matrix

spec = {
    "dynamics": ["gene", "kuramoto"],
    "families": ["grid", "er"],
    "methods": ["agog", "ndcn"],
    "seeds": [0, 1],
    "tasks": ["extrap"],
    "protocol": "irregular",
    "train_frac": 0.3,
    "n": 16,
    "epochs": 60,  # desk-scale; the benchmark default is 800
}

t0 = time.perf_counter()
report = run_experiment_matrix(spec, jobs=4)
print(f"ran {len(spec['dynamics']) * len(spec['families']) * len(spec['seeds'])} "
      f"cells in {time.perf_counter() - t0:.1f}s, "
      f"{len(report.rows)} report rows, {len(report.failures)} failures\n")

print(f"{'dynamics':9s} {'graph':6s} {'method':6s} {'NormL1 (seed mean)':>18s}")
for row in report.rows:
    if row["seed"] == "mean" and row["metric"] == "NormL1":
        print(f"{row['dynamics']:9s} {row['graph']:6s} {row['method']:6s} "
              f"{row['value']:18.4f}")
