"""Command-line surface: generate, train, eval, viz, matrix.

Exit codes: 0 success, 1 usage error, 2 numeric failure, 3 partial matrix
failure. DYNETFORGE_THREADS, when set, caps BLAS math parallelism (exported
before numpy loads; worker processes inherit it).
"""

import os

_threads = os.environ.get("DYNETFORGE_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import json
import math
import sys

import numpy as np

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_PARTIAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; the contract here is 1
    def error(self, message):
        raise UsageError(message)


def _build_parser():
    parser = _Parser(prog="dynetforge",
                     description="Simulate network dynamics, train snapshot "
                                 "predictors, and evaluate them.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="simulate a trajectory and write a dataset file")
    gen.add_argument("--dynamics", required=True,
                     choices=("gene", "kuramoto", "mutualistic"))
    gen.add_argument("--graph", required=True,
                     choices=("community", "grid", "er", "powerlaw", "smallworld"))
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--protocol", choices=("irregular", "regular"), default="irregular")
    gen.add_argument("--train-frac", type=float, default=0.1,
                     help="train share of the first 100 irregular snapshots")
    gen.add_argument("--horizon", type=float, default=None)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.add_argument("--force", action="store_true",
                     help="overwrite an existing output file")

    tr = sub.add_parser("train", help="train a model on a dataset file")
    tr.add_argument("--model", required=True,
                    choices=("agog", "agog-star", "ndcn", "gru-gnn", "lstm-gnn", "rnn-gnn"))
    tr.add_argument("--data", required=True)
    tr.add_argument("--epochs", type=int, default=800)
    tr.add_argument("--lr", type=float, default=0.01)
    tr.add_argument("--hidden", type=int, default=20)
    tr.add_argument("--augment", type=int, default=5)
    tr.add_argument("--gcn-hidden", type=int, default=10)
    tr.add_argument("--cell-hidden", type=int, default=5)
    tr.add_argument("--substeps", type=int, default=0,
                    help="0: one Euler step per solve interval (default); "
                         "N>0: uniform horizon/N grid inside every solve")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--out", required=True)
    tr.add_argument("--progress-every", type=int, default=100)

    ev = sub.add_parser("eval", help="evaluate a checkpoint; append report rows")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--task", required=True, choices=("interp", "extrap", "regular"))
    ev.add_argument("--out", required=True)

    vz = sub.add_parser("viz", help="write truth/prediction snapshot grids")
    vz.add_argument("--checkpoint", required=True)
    vz.add_argument("--data", required=True)
    vz.add_argument("--times", required=True,
                    help="comma-separated times, e.g. 0.5,1.0,2.5")
    vz.add_argument("--out", required=True)

    mx = sub.add_parser("matrix", help="run an experiment matrix from a spec file")
    mx.add_argument("--spec", required=True)
    mx.add_argument("--jobs", type=int, default=1)
    mx.add_argument("--out-dir", required=True)
    return parser


def _cmd_generate(args):
    from .dynamics import build_dataset
    from .storage import save_dataset

    if not args.force and os.path.exists(args.out):
        raise UsageError(f"{args.out} exists; pass --force to overwrite")
    ds = build_dataset(family=args.graph, dyn_name=args.dynamics, n=args.n,
                       protocol=args.protocol, train_frac=args.train_frac,
                       seed=args.seed, horizon=args.horizon)
    save_dataset(args.out, ds, force=True)
    counts = {label: ds.split.count(label) for label in
              ("train", "interp_test", "extrap_test")}
    print(f"wrote {args.out}: n={ds.graph.n} edges={len(ds.graph.edges)} "
          f"components={ds.graph.n_components} snapshots={len(ds.timestamps)} "
          f"split train/interp/extrap = {counts['train']}/{counts['interp_test']}"
          f"/{counts['extrap_test']}")
    return EXIT_OK


def _cmd_train(args):
    from .storage import load_dataset, save_checkpoint
    from .training import TrainConfig, train

    ds = load_dataset(args.data)
    config = TrainConfig(model_type=args.model, epochs=args.epochs, lr=args.lr,
                         seed=args.seed, hidden=args.hidden, augment=args.augment,
                         gcn_hidden=args.gcn_hidden, cell_hidden=args.cell_hidden,
                         substeps=args.substeps)
    every = max(1, args.progress_every)

    def progress(epoch, loss):
        if epoch % every == 0 or epoch == config.epochs - 1:
            print(f"epoch {epoch:5d}  loss {loss:.6f}", flush=True)

    ckpt = train(ds, config, progress=progress)
    save_checkpoint(args.out, ckpt)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_eval(args):
    from .storage import (append_report_rows, append_series_rows, load_checkpoint,
                          load_dataset, series_path_for)
    from .training import error_over_time, evaluate

    ds = load_dataset(args.data)
    ckpt = load_checkpoint(args.checkpoint)
    rows = evaluate(ckpt, ds, args.task)
    series = error_over_time(ckpt, ds, args.task)
    append_report_rows(args.out, rows)
    append_series_rows(series_path_for(args.out), series)
    for row in rows:
        print(f"{row['task']} {row['method']} {row['metric']} = {row['value']:.6f}")
    return EXIT_OK


def _cmd_viz(args):
    from . import agog, baselines
    from .autodiff import Tensor, no_grad
    from .graphs import normalized_laplacian
    from .storage import load_checkpoint, load_dataset, write_viz
    from .training import TEMPORAL_TYPES, train_subsequence

    try:
        times = [float(part) for part in args.times.split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --times value: {exc}") from None
    if not times:
        raise UsageError("--times needs at least one value")
    ds = load_dataset(args.data)
    ckpt = load_checkpoint(args.checkpoint)
    if ckpt.model_type in TEMPORAL_TYPES:
        raise UsageError(f"viz supports continuous-time models, not {ckpt.model_type}")
    for t in times:
        if not (0.0 <= t <= ds.horizon):
            raise UsageError(f"time {t} outside the dataset horizon [0, {ds.horizon}]")

    n = ds.graph.n
    side = math.isqrt(n)
    if side * side == n:
        rows, cols = side, side
    else:
        print(f"warning: n={n} is not a perfect square; writing a 1x{n} strip",
              file=sys.stderr)
        rows, cols = 1, n
    train_times, train_states = train_subsequence(ds)
    phi = Tensor(normalized_laplacian(ds.graph))
    policy = agog.StepPolicy.for_horizon(ds.horizon, ckpt.config.substeps)
    q = np.array(sorted(times))
    if ckpt.model_type == "ndcn":
        with no_grad():
            preds = np.stack([t.data for t in baselines.ndcn_forward(
                ckpt.params, phi, train_states[0], train_times[0], q, policy)])
    else:
        preds = agog.inference_rollout(ckpt.params, phi, train_times, train_states,
                                       q, "interpolation", policy)
    truth = _truth_at(ds, q)
    blocks = []
    for qi, t in enumerate(q):
        err = float(np.mean(np.abs(preds[qi] - truth[qi])))
        blocks.append((t, truth[qi][:, 0], preds[qi][:, 0], err))
    write_viz(args.out, ckpt.model_type, rows, cols, blocks)
    print(f"wrote {args.out}: {len(blocks)} snapshot grids ({rows}x{cols})")
    return EXIT_OK


def _truth_at(ds, query_times: np.ndarray) -> np.ndarray:
    """Ground truth at arbitrary times: stored snapshots where available,
    re-integration from the stored initial condition otherwise."""
    from .dynamics import integrate_reference
    from .graphs import adjacency

    out = np.empty((len(query_times), ds.states.shape[1], ds.states.shape[2]))
    missing = []
    for qi, t in enumerate(query_times):
        hit = np.where(np.isclose(ds.timestamps, t, rtol=0.0, atol=1e-12))[0]
        if hit.size:
            out[qi] = ds.states[hit[0]]
        else:
            missing.append(qi)
    if missing:
        t_eval = query_times[missing]
        states = integrate_reference(ds.dynamics, adjacency(ds.graph),
                                     ds.meta["z_init"], t_eval,
                                     rtol=ds.meta["rtol"], atol=ds.meta["atol"])
        for pos, qi in enumerate(missing):
            out[qi] = states[pos]
    return out


def _cmd_matrix(args):
    from .storage import append_report_rows, append_series_rows
    from .training import run_experiment_matrix

    with open(args.spec) as fh:
        spec = json.load(fh)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    os.makedirs(args.out_dir, exist_ok=True)
    report = run_experiment_matrix(spec, jobs=args.jobs)
    report_path = os.path.join(args.out_dir, "report.csv")
    series_path = os.path.join(args.out_dir, "report.series.csv")
    for path in (report_path, series_path):
        if os.path.exists(path):
            os.remove(path)
    append_report_rows(report_path, report.rows)
    append_series_rows(series_path, report.series)
    print(f"wrote {report_path} ({len(report.rows)} rows) and {series_path}")
    if report.failures:
        for failure in report.failures:
            print(f"FAILED cell {failure['dynamics']}/{failure['graph']}"
                  f"/seed={failure['seed']}: {failure['error']}", file=sys.stderr)
        print(f"{len(report.failures)} cell(s) failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    handlers = {"generate": _cmd_generate, "train": _cmd_train, "eval": _cmd_eval,
                "viz": _cmd_viz, "matrix": _cmd_matrix}
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, FileExistsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
