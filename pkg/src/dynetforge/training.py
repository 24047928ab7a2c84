"""Loss assembly, training loops, the three evaluation tasks, and metrics.

Training is full batch: one trajectory, one loss, one Adam step per epoch,
deterministic for a fixed seed. Evaluation feeds only train-split snapshots
into model rollouts; test snapshots are touched exclusively by the metrics.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import agog, baselines
from .autodiff import (NumericError, Tensor, add, backward, mean_abs, no_grad,
                       scalar_mul, sub)
from .dynamics import Dataset, build_dataset
from .graphs import normalized_laplacian
from .optim import Adam

MODEL_TYPES = ("agog", "agog-star", "ndcn", "gru-gnn", "lstm-gnn", "rnn-gnn")
TEMPORAL_TYPES = ("gru-gnn", "lstm-gnn", "rnn-gnn")
TASKS = ("interp", "extrap", "regular")


class MetricUndefined(ValueError):
    """The normalized metric's denominator (mean |truth|) is zero."""


class TaskError(ValueError):
    """Dataset split or protocol does not support the requested task/model."""


@dataclass
class TrainConfig:
    model_type: str = "agog"
    epochs: int = 800
    lr: float = 0.01
    seed: int = 0
    hidden: int = 20  # hidden width d (AGOG, NDCN)
    augment: int = 5  # extra zero-initialized ODE columns p (AGOG)
    gcn_hidden: int = 10  # GCN block width (temporal models)
    cell_hidden: int = 5  # recurrent cell width (temporal models)
    substeps: int = 0  # 0: one Euler step per interval; >0: horizon/substeps grid
    continuity_enabled: bool = True

    def __post_init__(self):
        if self.model_type not in MODEL_TYPES:
            raise ValueError(f"unknown model {self.model_type!r}, expected one of {MODEL_TYPES}")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.model_type == "agog-star":
            self.continuity_enabled = False


@dataclass
class Checkpoint:
    model_type: str
    params: object
    config: TrainConfig
    optimizer: Adam
    loss_trace: list = field(default_factory=list)


def agog_loss(solver_decodes, corrected_decodes, observations,
              continuity: bool = True) -> Tensor:
    """Reconstruction term plus (optionally) the continuity term.

    Both are means over the training timestamps of the mean element-wise
    absolute difference: solver decodes against true snapshots, and corrected
    decodes against solver decodes. Dropping the continuity term gives the
    ablated objective used by the agog-star variant.
    """
    m = len(observations)
    if len(solver_decodes) != m or len(corrected_decodes) != m:
        raise ValueError(f"sequence lengths differ: {len(solver_decodes)} solver, "
                         f"{len(corrected_decodes)} corrected, {m} observed")
    recon = mean_abs(sub(solver_decodes[0], observations[0]))
    for i in range(1, m):
        recon = add(recon, mean_abs(sub(solver_decodes[i], observations[i])))
    loss = scalar_mul(recon, 1.0 / m)
    if continuity:
        cont = mean_abs(sub(corrected_decodes[0], solver_decodes[0]))
        for i in range(1, m):
            cont = add(cont, mean_abs(sub(corrected_decodes[i], solver_decodes[i])))
        loss = add(loss, scalar_mul(cont, 1.0 / m))
    return loss


def ndcn_loss(predictions, observations) -> Tensor:
    """Mean over timestamps of the mean element-wise absolute difference."""
    m = len(observations)
    if len(predictions) != m:
        raise ValueError(f"got {len(predictions)} predictions for {m} observations")
    total = mean_abs(sub(predictions[0], observations[0]))
    for i in range(1, m):
        total = add(total, mean_abs(sub(predictions[i], observations[i])))
    return scalar_mul(total, 1.0 / m)


def _init_params(config: TrainConfig, n: int, k: int):
    if config.model_type in ("agog", "agog-star"):
        return agog.init_agog_params(n, k, config.hidden, config.augment, config.seed)
    if config.model_type == "ndcn":
        return baselines.init_ndcn_params(n, k, config.hidden, config.seed)
    cell = config.model_type.split("-")[0]
    return baselines.init_temporal_params(n, k, config.gcn_hidden,
                                          config.cell_hidden, cell, config.seed)


def train_subsequence(dataset: Dataset):
    """Timestamps and states of the train-labeled snapshots."""
    idx = dataset.indices("train")
    if idx.size < 2:
        raise TaskError("training needs at least 2 train-labeled snapshots")
    return dataset.timestamps[idx], dataset.states[idx]


def train(dataset: Dataset, config: TrainConfig, progress=None) -> Checkpoint:
    """Train one model on the train-split snapshots of one dataset.

    ``progress`` is an optional callable(epoch, loss) invoked once per epoch.
    """
    if config.model_type in TEMPORAL_TYPES and dataset.schedule != "regular":
        raise TaskError(f"{config.model_type} requires a regular schedule, "
                        f"got {dataset.schedule!r}")
    times, states = train_subsequence(dataset)
    n, k = dataset.states.shape[1], dataset.states.shape[2]
    phi = Tensor(normalized_laplacian(dataset.graph))
    policy = agog.StepPolicy.for_horizon(dataset.horizon, config.substeps)
    params = _init_params(config, n, k)
    opt = Adam(params.named_parameters(), lr=config.lr)
    obs = [Tensor(x) for x in states]

    trace = []
    for epoch in range(config.epochs):
        opt.zero_grad()
        if config.model_type in ("agog", "agog-star"):
            solver_d, corrected_d = agog.train_rollout(times, obs, params, phi, policy)
            loss = agog_loss(solver_d, corrected_d, obs, config.continuity_enabled)
        elif config.model_type == "ndcn":
            preds = baselines.ndcn_forward(params, phi, obs[0], times[0], times, policy)
            loss = ndcn_loss(preds, obs)
        else:
            preds = baselines.temporal_gnn_forward(params, phi, obs[:-1])
            loss = ndcn_loss(preds, obs[1:])
        value = loss.item()
        if not math.isfinite(value):
            raise NumericError(f"non-finite loss at epoch {epoch}")
        trace.append(value)
        if progress is not None:
            progress(epoch, value)
        backward(loss)
        opt.step()
    return Checkpoint(model_type=config.model_type, params=params, config=config,
                      optimizer=opt, loss_trace=trace)


# ---------------------------------------------------------------------------
# evaluation

def _check_task(dataset: Dataset, task: str, model_type: str):
    if task not in TASKS:
        raise TaskError(f"unknown task {task!r}, expected one of {TASKS}")
    if task == "interp":
        if not dataset.has_label("interp_test"):
            raise TaskError("no interp_test split in this dataset")
        if model_type in TEMPORAL_TYPES:
            raise TaskError(f"{model_type} cannot interpolate irregular snapshots")
    else:
        if not dataset.has_label("extrap_test"):
            raise TaskError("no extrap_test split in this dataset")
        if task == "regular" and dataset.schedule != "regular":
            raise TaskError("regular task needs a regular-schedule dataset")
        if model_type in TEMPORAL_TYPES and dataset.schedule != "regular":
            raise TaskError(f"{model_type} requires a regular schedule")


def predictions_for_task(ckpt: Checkpoint, dataset: Dataset, task: str):
    """Model predictions at the task's query times, with the ground truth.

    Returns (query_indices, predictions, truth) where predictions and truth
    have shape (len(query), n, k).
    """
    _check_task(dataset, task, ckpt.model_type)
    label = "interp_test" if task == "interp" else "extrap_test"
    q_idx = dataset.indices(label)
    q_times = dataset.timestamps[q_idx]
    truth = dataset.states[q_idx]
    times, states = train_subsequence(dataset)
    phi = Tensor(normalized_laplacian(dataset.graph))
    policy = agog.StepPolicy.for_horizon(dataset.horizon, ckpt.config.substeps)

    if ckpt.model_type in ("agog", "agog-star"):
        mode = "interpolation" if task == "interp" else "extrapolation"
        preds = agog.inference_rollout(ckpt.params, phi, times, states, q_times,
                                       mode, policy)
    elif ckpt.model_type == "ndcn":
        with no_grad():
            out = baselines.ndcn_forward(ckpt.params, phi, states[0], times[0],
                                         q_times, policy)
            preds = np.stack([t.data for t in out])
    else:
        preds = baselines.temporal_gnn_extrapolate(ckpt.params, phi,
                                                   [Tensor(x) for x in states],
                                                   len(q_idx))
    return q_idx, preds, truth


def mae(pred: np.ndarray, truth: np.ndarray) -> float:
    return float(np.mean(np.abs(pred - truth)))


def norm_l1(pred: np.ndarray, truth: np.ndarray) -> float:
    """MAE normalized by the mean absolute ground-truth value of the split."""
    denom = float(np.mean(np.abs(truth)))
    if denom == 0.0:
        raise MetricUndefined("mean |truth| is zero; normalized L1 undefined")
    return mae(pred, truth) / denom


def evaluate(ckpt: Checkpoint, dataset: Dataset, task: str) -> list:
    """MAE and normalized-L1 rows for one trained model on one task."""
    _, preds, truth = predictions_for_task(ckpt, dataset, task)
    shared = dict(task=task, dynamics=dataset.dynamics.name,
                  graph=dataset.graph.family, method=ckpt.model_type,
                  seed=dataset.seed)
    return [dict(shared, metric="MAE", value=mae(preds, truth)),
            dict(shared, metric="NormL1", value=norm_l1(preds, truth))]


def error_over_time(ckpt: Checkpoint, dataset: Dataset, task: str) -> list:
    """Per-test-timestamp mean absolute error, ordered by timestamp index."""
    q_idx, preds, truth = predictions_for_task(ckpt, dataset, task)
    series = []
    for pos, idx in enumerate(q_idx):
        series.append(dict(task=task, dynamics=dataset.dynamics.name,
                           graph=dataset.graph.family, method=ckpt.model_type,
                           seed=dataset.seed, index=int(idx),
                           time=float(dataset.timestamps[idx]),
                           error=float(np.mean(np.abs(preds[pos] - truth[pos])))))
    return series


# ---------------------------------------------------------------------------
# experiment matrix

MATRIX_DEFAULTS = {
    "protocol": "irregular",
    "train_frac": 0.1,
    "n": 400,
    "epochs": 800,
    "lr": 0.01,
    "hidden": 20,
    "augment": 5,
    "gcn_hidden": 10,
    "cell_hidden": 5,
    "substeps": 0,
    "horizon": None,
}


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)
    series: list = field(default_factory=list)
    failures: list = field(default_factory=list)


def _matrix_config(spec: dict) -> dict:
    cfg = dict(MATRIX_DEFAULTS)
    for key in cfg:
        if key in spec:
            cfg[key] = spec[key]
    required = ("dynamics", "families", "methods", "seeds", "tasks")
    missing = [key for key in required if key not in spec]
    if missing:
        raise ValueError(f"matrix spec is missing {missing}")
    for task in spec["tasks"]:
        if task not in TASKS:
            raise ValueError(f"unknown task {task!r} in matrix spec")
        if task == "regular" and cfg["protocol"] != "regular":
            raise ValueError("regular task needs protocol 'regular'")
        if task == "interp" and cfg["protocol"] != "irregular":
            raise ValueError("interp task needs protocol 'irregular'")
    for method in spec["methods"]:
        if method not in MODEL_TYPES:
            raise ValueError(f"unknown method {method!r} in matrix spec")
    return cfg


def _run_cell(args):
    """One (dynamics, family, seed) cell: shared dataset, all methods, all tasks."""
    spec, cfg, dyn, family, seed = args
    dataset = build_dataset(family=family, dyn_name=dyn, n=cfg["n"],
                            protocol=cfg["protocol"], train_frac=cfg["train_frac"],
                            seed=seed, horizon=cfg["horizon"])
    rows, series = [], []
    for method in spec["methods"]:
        config = TrainConfig(model_type=method, epochs=cfg["epochs"], lr=cfg["lr"],
                             seed=seed, hidden=cfg["hidden"], augment=cfg["augment"],
                             gcn_hidden=cfg["gcn_hidden"],
                             cell_hidden=cfg["cell_hidden"],
                             substeps=cfg["substeps"])
        ckpt = train(dataset, config)
        for task in spec["tasks"]:
            rows.extend(evaluate(ckpt, dataset, task))
            series.extend(error_over_time(ckpt, dataset, task))
    return rows, series


def _row_key(row):
    seed = row["seed"]
    return (row["task"], row["dynamics"], row["graph"], row["method"], row["metric"],
            1 if seed == "mean" else 0, str(seed))


def run_experiment_matrix(spec: dict, jobs: int = 1) -> EvalReport:
    """Run every (dynamics x family x seed) cell and aggregate seed means.

    Each cell builds one dataset that every method shares. Failed cells are
    recorded in ``failures`` and do not block the others. Row order (and the
    aggregated means) is independent of worker scheduling.
    """
    cfg = _matrix_config(spec)
    cells = [(spec, cfg, dyn, family, seed)
             for dyn in spec["dynamics"]
             for family in spec["families"]
             for seed in spec["seeds"]]
    report = EvalReport()
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_cell_wrapper, cells))
    else:
        outcomes = [_cell_wrapper(cell) for cell in cells]
    for (_, _, dyn, family, seed), outcome in zip(cells, outcomes):
        if isinstance(outcome, str):
            report.failures.append({"dynamics": dyn, "graph": family,
                                    "seed": seed, "error": outcome})
        else:
            rows, series = outcome
            report.rows.extend(rows)
            report.series.extend(series)

    # seed-mean aggregate rows
    groups = {}
    for row in report.rows:
        key = (row["task"], row["dynamics"], row["graph"], row["method"], row["metric"])
        groups.setdefault(key, []).append(row["value"])
    for (task, dyn, family, method, metric), values in groups.items():
        report.rows.append(dict(task=task, dynamics=dyn, graph=family, method=method,
                                metric=metric, value=float(np.mean(values)),
                                seed="mean"))
    report.rows.sort(key=_row_key)
    report.series.sort(key=lambda s: (s["task"], s["dynamics"], s["graph"],
                                      s["method"], str(s["seed"]), s["index"]))
    return report


def _cell_wrapper(args):
    try:
        return _run_cell(args)
    except Exception as exc:  # noqa: BLE001 - cell isolation is the point
        return f"{type(exc).__name__}: {exc}"
