"""File formats: dataset/checkpoint containers, report CSVs, snapshot grids.

Datasets and checkpoints share one container layout: a human-readable JSON
header followed by a little-endian float64 binary section holding every
array at full precision. The header is canonical (sorted keys, fixed
separators) and arrays are written in sorted-name order, so write -> read ->
write round-trips are byte-identical. The dataset states block carries a
sha256 checksum.
"""

import csv
import hashlib
import json
import os
from dataclasses import asdict

import numpy as np

from . import __version__
from .agog import AgogParams, init_agog_params
from .baselines import init_ndcn_params, init_temporal_params
from .dynamics import Dataset, DynamicsSpec
from .graphs import Graph
from .optim import Adam
from .training import Checkpoint, TrainConfig

MAGIC = "DYNETFORGE"
FORMAT_VERSION = 1


class ContainerError(ValueError):
    """Malformed, truncated, or checksum-failing container file."""


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def write_container(path, kind: str, meta: dict, arrays: dict, force: bool = True):
    if not force and os.path.exists(path):
        raise FileExistsError(f"{path} exists; pass force to overwrite")
    blobs = {}
    offset = 0
    index = {}
    for name in sorted(arrays):
        arr = np.ascontiguousarray(np.asarray(arrays[name], dtype="<f8"))
        raw = arr.tobytes()
        blobs[name] = raw
        index[name] = {"shape": list(arr.shape), "offset": offset, "nbytes": len(raw)}
        offset += len(raw)
    blob = b"".join(blobs[name] for name in sorted(arrays))
    header = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "tool_version": __version__,
        "meta": meta,
        "arrays": index,
        "blob_sha256": hashlib.sha256(blob).hexdigest(),
    }
    if "states" in blobs:
        header["states_sha256"] = hashlib.sha256(blobs["states"]).hexdigest()
    payload = _canonical_json(header)
    with open(path, "wb") as fh:
        fh.write(f"{MAGIC} {kind} {FORMAT_VERSION}\n".encode("ascii"))
        fh.write(f"{len(payload)}\n".encode("ascii"))
        fh.write(payload)
        fh.write(b"\n")
        fh.write(blob)


def read_container(path):
    with open(path, "rb") as fh:
        magic_line = fh.readline().decode("ascii", errors="replace").strip()
        parts = magic_line.split()
        if len(parts) != 3 or parts[0] != MAGIC:
            raise ContainerError(f"{path}: not a dynetforge container")
        kind = parts[1]
        if int(parts[2]) != FORMAT_VERSION:
            raise ContainerError(f"{path}: unsupported format version {parts[2]}")
        header_len = int(fh.readline().decode("ascii").strip())
        header = json.loads(fh.read(header_len).decode("utf-8"))
        fh.read(1)  # newline separator
        blob = fh.read()
    if hashlib.sha256(blob).hexdigest() != header["blob_sha256"]:
        raise ContainerError(f"{path}: binary section checksum mismatch")
    arrays = {}
    for name, entry in header["arrays"].items():
        start, nbytes = entry["offset"], entry["nbytes"]
        arr = np.frombuffer(blob[start:start + nbytes], dtype="<f8")
        arrays[name] = arr.reshape(entry["shape"]).copy()
    if "states_sha256" in header:
        raw = blob[header["arrays"]["states"]["offset"]:
                   header["arrays"]["states"]["offset"] + header["arrays"]["states"]["nbytes"]]
        if hashlib.sha256(raw).hexdigest() != header["states_sha256"]:
            raise ContainerError(f"{path}: states checksum mismatch")
    return kind, header["meta"], arrays


# ---------------------------------------------------------------------------
# datasets

def save_dataset(path, ds: Dataset, force: bool = True):
    scalar_coeffs = {}
    arrays = {"timestamps": ds.timestamps, "states": ds.states,
              "z_init": ds.meta["z_init"]}
    for name, value in ds.dynamics.coeffs.items():
        if np.isscalar(value):
            scalar_coeffs[name] = float(value)
        else:
            arrays[f"coeff.{name}"] = np.asarray(value)
    meta = {
        "graph": {
            "n": ds.graph.n,
            "family": ds.graph.family,
            "params": ds.graph.params,
            "seed": ds.graph.seed,
            "n_components": ds.graph.n_components,
            "edges": [list(e) for e in ds.graph.edges],
        },
        "dynamics": {
            "name": ds.dynamics.name,
            "state_dim": ds.dynamics.state_dim,
            "scalar_coeffs": scalar_coeffs,
        },
        "schedule": ds.schedule,
        "split": list(ds.split),
        "seed": ds.seed,
        "horizon": float(ds.meta["horizon"]),
        "rtol": float(ds.meta["rtol"]),
        "atol": float(ds.meta["atol"]),
        "train_frac": ds.meta.get("train_frac"),
    }
    write_container(path, "dataset", meta, arrays, force=force)


def load_dataset(path) -> Dataset:
    kind, meta, arrays = read_container(path)
    if kind != "dataset":
        raise ContainerError(f"{path}: expected a dataset container, got {kind!r}")
    g = meta["graph"]
    graph = Graph(n=g["n"], edges=tuple(tuple(e) for e in g["edges"]),
                  family=g["family"], params=g["params"], seed=g["seed"],
                  n_components=g["n_components"])
    coeffs = dict(meta["dynamics"]["scalar_coeffs"])
    for name, arr in arrays.items():
        if name.startswith("coeff."):
            coeffs[name[len("coeff."):]] = arr
    spec = DynamicsSpec(name=meta["dynamics"]["name"], coeffs=coeffs,
                        state_dim=meta["dynamics"]["state_dim"])
    ds_meta = {"horizon": meta["horizon"], "rtol": meta["rtol"], "atol": meta["atol"],
               "train_frac": meta.get("train_frac"), "z_init": arrays["z_init"]}
    return Dataset(graph=graph, dynamics=spec, timestamps=arrays["timestamps"],
                   states=arrays["states"], split=list(meta["split"]),
                   schedule=meta["schedule"], seed=meta["seed"], meta=ds_meta)


# ---------------------------------------------------------------------------
# checkpoints

def _hyper_of(ckpt: Checkpoint) -> dict:
    p = ckpt.params
    if isinstance(p, AgogParams):
        return {"n": p.n, "k": p.k, "d": p.d, "p": p.p}
    if ckpt.model_type == "ndcn":
        return {"n": p.n, "k": p.k, "d": p.d}
    return {"n": p.n, "k": p.k, "g1": p.g1, "g2": p.g2, "cell": p.cell_type}


def save_checkpoint(path, ckpt: Checkpoint, force: bool = True):
    arrays = {"loss_trace": np.asarray(ckpt.loss_trace, dtype=np.float64)}
    for name, tensor in ckpt.params.named_parameters().items():
        arrays[f"param.{name}"] = tensor.data
    arrays.update(ckpt.optimizer.state_arrays())
    cfg = asdict(ckpt.config)
    meta = {
        "model_type": ckpt.model_type,
        "hyper": _hyper_of(ckpt),
        "config": cfg,
        "adam_t": ckpt.optimizer.t,
    }
    write_container(path, "checkpoint", meta, arrays, force=force)


def load_checkpoint(path) -> Checkpoint:
    kind, meta, arrays = read_container(path)
    if kind != "checkpoint":
        raise ContainerError(f"{path}: expected a checkpoint container, got {kind!r}")
    config = TrainConfig(**meta["config"])
    hyper = meta["hyper"]
    model_type = meta["model_type"]
    if model_type in ("agog", "agog-star"):
        params = init_agog_params(hyper["n"], hyper["k"], hyper["d"], hyper["p"],
                                  config.seed)
    elif model_type == "ndcn":
        params = init_ndcn_params(hyper["n"], hyper["k"], hyper["d"], config.seed)
    else:
        params = init_temporal_params(hyper["n"], hyper["k"], hyper["g1"],
                                      hyper["g2"], hyper["cell"], config.seed)
    named = params.named_parameters()
    for name, tensor in named.items():
        tensor.data = np.array(arrays[f"param.{name}"], dtype=np.float64)
        tensor.zero_grad()
    opt = Adam(named, lr=config.lr)
    opt.load_state_arrays(arrays, meta["adam_t"])
    return Checkpoint(model_type=model_type, params=params, config=config,
                      optimizer=opt, loss_trace=list(arrays["loss_trace"]))


# ---------------------------------------------------------------------------
# reports

REPORT_FIELDS = ("task", "dynamics", "graph", "method", "metric", "value", "seed")
SERIES_FIELDS = ("task", "dynamics", "graph", "method", "seed", "index", "time", "error")


def series_path_for(report_path: str) -> str:
    root, ext = os.path.splitext(report_path)
    return f"{root}.series{ext or '.csv'}"


def _append_csv(path, fields, rows, float_fields):
    new_file = not os.path.exists(path)
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(fields)
        for row in rows:
            out = []
            for name in fields:
                value = row[name]
                out.append(repr(float(value)) if name in float_fields else value)
            writer.writerow(out)


def append_report_rows(path, rows):
    """Append metric rows; full-precision decimal values, header on first write."""
    _append_csv(path, REPORT_FIELDS, rows, float_fields={"value"})


def append_series_rows(path, series):
    _append_csv(path, SERIES_FIELDS, series, float_fields={"time", "error"})


def read_report_rows(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# snapshot grids

def write_viz(path, model_type: str, rows: int, cols: int, blocks):
    """Structured-text snapshot grids: per time, truth and prediction values.

    ``blocks`` is a sequence of (time, truth, prediction, mae) with truth and
    prediction flat length rows*cols arrays; values are written as rows of
    full-precision doubles, consumable by any plotting tool.
    """
    with open(path, "w") as fh:
        fh.write("# dynetforge snapshot grids\n")
        fh.write(f"# model {model_type}\n")
        fh.write(f"# layout {rows} {cols}\n")
        for time, truth, pred, err in blocks:
            fh.write(f"time {float(time)!r} mae {float(err)!r}\n")
            for label, values in (("truth", truth), ("prediction", pred)):
                fh.write(label + "\n")
                grid = np.asarray(values, dtype=np.float64).reshape(rows, cols)
                for r in range(rows):
                    fh.write(" ".join(repr(float(v)) for v in grid[r]) + "\n")
            fh.write("\n")
