"""Comparison models: NDCN and the temporal GCN-plus-recurrent-cell family.

NDCN encodes only the first snapshot and runs a single graph-convolutional
ODE across the whole time span, decoding wherever a prediction is needed;
observations after the start never correct its trajectory (they only enter
the training loss).

The temporal models (gru-gnn, lstm-gnn, rnn-gnn) apply to equally spaced
sequences only: each step passes the current snapshot through a shared GCN
block, updates a recurrent cell, and decodes the cell state as the next
snapshot. Training is teacher-forced over the observed prefix; beyond it the
model feeds its own predictions back autoregressively.
"""

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, add, matmul, mul, no_grad, relu, sigmoid, tanh
from .agog import (GruParams, StepPolicy, _uniform_init, _zeros, decode, encode,
                   euler_solve, gru_cell)


@dataclass
class NdcnParams:
    """Encoder, d-wide GNN ODE weights, and decoder (no augmentation, no GRU)."""

    n: int
    k: int
    d: int
    enc_weight: Tensor
    enc_bias: Tensor
    interact_weight: Tensor
    self_weight: Tensor
    self_bias: Tensor
    dec_weight: Tensor
    dec_bias: Tensor

    def named_parameters(self) -> dict:
        return {name: getattr(self, name) for name in
                ("enc_weight", "enc_bias", "interact_weight", "self_weight",
                 "self_bias", "dec_weight", "dec_bias")}


def init_ndcn_params(n: int, k: int, d: int, seed: int) -> NdcnParams:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(11,)))
    return NdcnParams(
        n=n, k=k, d=d,
        enc_weight=_uniform_init(rng, k, d),
        enc_bias=_zeros(n, d),
        interact_weight=_uniform_init(rng, d, d),
        self_weight=_uniform_init(rng, d, d),
        self_bias=_zeros(n, d),
        dec_weight=_uniform_init(rng, d, k),
        dec_bias=_zeros(n, k),
    )


def ndcn_forward(params: NdcnParams, phi: Tensor, x0, t0: float,
                 query_times, policy: StepPolicy) -> list:
    """Decode one continuous hidden trajectory at each sorted query time.

    A query equal to t0 decodes the encoded initial snapshot directly.
    """
    query_times = np.asarray(query_times, dtype=np.float64)
    if query_times.size and query_times[0] < t0:
        raise ValueError(f"query at t={query_times[0]:.6g} precedes start t0={t0:.6g}")
    if np.any(np.diff(query_times) < 0):
        raise ValueError("query times must be sorted")
    h = encode(x0, params)
    preds = []
    t_prev = t0
    for t in query_times:
        if t > t_prev:
            h = euler_solve(h, t_prev, t, phi, params, policy)
            t_prev = t
        preds.append(decode(h, params))
    return preds


@dataclass
class LstmParams:
    in_w: Tensor
    in_u: Tensor
    in_bw: Tensor
    in_bu: Tensor
    forget_w: Tensor
    forget_u: Tensor
    forget_bw: Tensor
    forget_bu: Tensor
    cell_w: Tensor
    cell_u: Tensor
    cell_bw: Tensor
    cell_bu: Tensor
    out_w: Tensor
    out_u: Tensor
    out_bw: Tensor
    out_bu: Tensor

    @classmethod
    def init(cls, n, in_width, hidden, rng):
        fields = {}
        for gate in ("in", "forget", "cell", "out"):
            fields[f"{gate}_w"] = _uniform_init(rng, in_width, hidden)
            fields[f"{gate}_u"] = _uniform_init(rng, hidden, hidden)
            fields[f"{gate}_bw"] = _zeros(n, hidden)
            fields[f"{gate}_bu"] = _zeros(n, hidden)
        return cls(**fields)

    def named(self, prefix="lstm"):
        out = {}
        for gate in ("in", "forget", "cell", "out"):
            for part in ("w", "u", "bw", "bu"):
                name = f"{gate}_{part}"
                out[f"{prefix}.{name}"] = getattr(self, name)
        return out


def lstm_cell(x_in, h_prev, c_prev, g: LstmParams):
    def gate(w, bw, u, bu):
        return add(add(matmul(x_in, w), bw), add(matmul(h_prev, u), bu))

    i = sigmoid(gate(g.in_w, g.in_bw, g.in_u, g.in_bu))
    f = sigmoid(gate(g.forget_w, g.forget_bw, g.forget_u, g.forget_bu))
    c_tilde = tanh(gate(g.cell_w, g.cell_bw, g.cell_u, g.cell_bu))
    o = sigmoid(gate(g.out_w, g.out_bw, g.out_u, g.out_bu))
    c = add(mul(f, c_prev), mul(i, c_tilde))
    return mul(o, tanh(c)), c


@dataclass
class RnnParams:
    w: Tensor
    u: Tensor
    bw: Tensor
    bu: Tensor

    @classmethod
    def init(cls, n, in_width, hidden, rng):
        return cls(w=_uniform_init(rng, in_width, hidden),
                   u=_uniform_init(rng, hidden, hidden),
                   bw=_zeros(n, hidden), bu=_zeros(n, hidden))

    def named(self, prefix="rnn"):
        return {f"{prefix}.{name}": getattr(self, name) for name in ("w", "u", "bw", "bu")}


def rnn_cell(x_in, h_prev, g: RnnParams):
    return tanh(add(add(matmul(x_in, g.w), g.bw), add(matmul(h_prev, g.u), g.bu)))


CELL_TYPES = ("gru", "lstm", "rnn")


@dataclass
class TemporalGnnParams:
    """Shared GCN block, one recurrent cell, and an affine decoder."""

    n: int
    k: int
    g1: int  # GCN block width
    g2: int  # recurrent cell width
    cell_type: str
    gcn_weight: Tensor  # k x g1
    gcn_bias: Tensor  # n x g1
    cell: object  # GruParams | LstmParams | RnnParams
    dec_weight: Tensor  # g2 x k
    dec_bias: Tensor  # n x k

    def named_parameters(self) -> dict:
        out = {"gcn_weight": self.gcn_weight, "gcn_bias": self.gcn_bias,
               "dec_weight": self.dec_weight, "dec_bias": self.dec_bias}
        out.update(self.cell.named(prefix=f"{self.cell_type}_cell"))
        return out


def init_temporal_params(n: int, k: int, g1: int, g2: int, cell_type: str,
                         seed: int) -> TemporalGnnParams:
    if cell_type not in CELL_TYPES:
        raise ValueError(f"unknown cell type {cell_type!r}, expected one of {CELL_TYPES}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(12,)))
    gcn_weight = _uniform_init(rng, k, g1)
    gcn_bias = _zeros(n, g1)
    if cell_type == "gru":
        cell = GruParams.init(n, g1, g2, rng)
    elif cell_type == "lstm":
        cell = LstmParams.init(n, g1, g2, rng)
    else:
        cell = RnnParams.init(n, g1, g2, rng)
    return TemporalGnnParams(n=n, k=k, g1=g1, g2=g2, cell_type=cell_type,
                             gcn_weight=gcn_weight, gcn_bias=gcn_bias, cell=cell,
                             dec_weight=_uniform_init(rng, g2, k),
                             dec_bias=_zeros(n, k))


def gcn_block(x, phi: Tensor, params: TemporalGnnParams) -> Tensor:
    """ReLU(phi @ x @ W + b): identical for every cell variant."""
    if not isinstance(x, Tensor):
        x = Tensor(x)
    return relu(add(matmul(matmul(phi, x), params.gcn_weight), params.gcn_bias))


def _temporal_step(x, h, c, phi, params):
    z = gcn_block(x, phi, params)
    if params.cell_type == "gru":
        h = gru_cell(z, h, params.cell)
    elif params.cell_type == "lstm":
        h, c = lstm_cell(z, h, c, params.cell)
    else:
        h = rnn_cell(z, h, params.cell)
    pred = add(matmul(h, params.dec_weight), params.dec_bias)
    return pred, h, c


def _initial_cell_state(params):
    h = Tensor(np.zeros((params.n, params.g2)))
    c = Tensor(np.zeros((params.n, params.g2))) if params.cell_type == "lstm" else None
    return h, c


def temporal_gnn_forward(params: TemporalGnnParams, phi: Tensor, observations) -> list:
    """Teacher-forced one-step-ahead predictions.

    Feeding observations x_0..x_{m-1} yields predictions for x_1..x_m (the
    final entry predicts one step past the input sequence).
    """
    h, c = _initial_cell_state(params)
    preds = []
    for x in observations:
        pred, h, c = _temporal_step(x, h, c, phi, params)
        preds.append(pred)
    return preds


def temporal_gnn_extrapolate(params: TemporalGnnParams, phi: Tensor,
                             train_observations, n_steps: int) -> np.ndarray:
    """Continue past the observed prefix on the model's own outputs."""
    with no_grad():
        h, c = _initial_cell_state(params)
        pred = None
        for x in train_observations:
            pred, h, c = _temporal_step(x, h, c, phi, params)
        out = np.empty((n_steps, params.n, params.k))
        out[0] = pred.data
        for step in range(1, n_steps):
            pred, h, c = _temporal_step(pred, h, c, phi, params)
            out[step] = pred.data
    return out
