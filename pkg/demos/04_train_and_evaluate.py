#!/usr/bin/env python3
"""Train AGOG and NDCN on one sparse irregular dataset and compare them.

Desk-scale version of the benchmark loop: simulate gene regulation on a 7x7
grid, observe 10% of the first 100 snapshots, train both models, evaluate
interpolation and extrapolation, and plot the per-timestamp error curves.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from dynetforge import TrainConfig, build_dataset, error_over_time, evaluate, train

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

EPOCHS = 300  # the benchmark default is 800; this keeps the demo brisk

ds = build_dataset("grid", "gene", 49, "irregular", train_frac=0.1, seed=1)
print(f"dataset: {len(ds.timestamps)} snapshots, "
      f"{ds.split.count('train')} train / {ds.split.count('interp_test')} interp "
      f"/ {ds.split.count('extrap_test')} extrap")

checkpoints = {}
for model in ("agog", "agog-star", "ndcn"):
    ckpt = train(ds, TrainConfig(model_type=model, epochs=EPOCHS, seed=1))
    checkpoints[model] = ckpt
    print(f"{model:9s} loss {ckpt.loss_trace[0]:.4f} -> {ckpt.loss_trace[-1]:.4f}")

print(f"\n{'model':9s} {'task':7s} {'MAE':>8s} {'NormL1':>8s}")
for model, ckpt in checkpoints.items():
    for task in ("interp", "extrap"):
        metrics = {r["metric"]: r["value"] for r in evaluate(ckpt, ds, task)}
        print(f"{model:9s} {task:7s} {metrics['MAE']:8.4f} {metrics['NormL1']:8.4f}")

fig, axes = plt.subplots(1, 2, figsize=(12, 4))
for task, ax in zip(("interp", "extrap"), axes):
    for model, ckpt in checkpoints.items():
        series = error_over_time(ckpt, ds, task)
        ax.plot([s["time"] for s in series], [s["error"] for s in series],
                marker=".", lw=1, label=model)
    ax.set_title(f"{task}: error at each held-out snapshot")
    ax.set_xlabel("time")
    ax.set_ylabel("mean |prediction - truth|")
    ax.legend()
fig.tight_layout()
path = os.path.join(OUT, "error_over_time.png")
fig.savefig(path, dpi=120)
print(f"\nwrote {path}")
