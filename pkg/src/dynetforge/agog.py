"""The AGOG model: autoregressive GNN-ODE hidden dynamics with GRU corrections.

A snapshot x (n x k) is encoded into a hidden state h (n x d). The hidden
state, zero-padded with p augmentation columns, evolves between observation
times under a graph-convolutional vector field

    dh_a/dt = phi @ h_a @ W_interact + h_a @ W_self + b_self,

integrated by explicit Euler with the step count fixed by a StepPolicy, fully
on the autodiff tape (discretize-then-optimize). At each observed time the
solver output is corrected toward the encoded observation by a GRU gate, the
corrected state is re-augmented with zero columns, and the rollout continues.
Both the raw solver output and the corrected state decode to snapshot space
through one affine readout.
"""

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import (NumericError, Tensor, add, concat_cols, matmul, mul,
                       no_grad, scalar_mul, sigmoid, slice_cols, sub, tanh)


@dataclass(frozen=True)
class StepPolicy:
    """Euler discretization of one solve interval.

    With ``dt=None`` (the default) every requested interval (t0, t1) is taken
    in a single Euler step, matching the fixed-grid convention of the solver
    package the benchmarks follow: the integration grid is exactly the
    requested times. A positive ``dt`` instead gives every interval
    max(1, ceil((t1 - t0)/dt)) uniform sub-steps.
    """

    dt: float | None = None

    def __post_init__(self):
        if self.dt is not None and self.dt <= 0:
            raise ValueError("step size must be positive")

    @classmethod
    def for_horizon(cls, horizon: float, substeps: int = 0) -> "StepPolicy":
        """substeps = 0 keeps the one-step-per-interval default; a positive
        count lays a uniform grid of horizon/substeps over every solve."""
        if substeps:
            return cls(horizon / substeps)
        return cls(None)

    def n_steps(self, t0: float, t1: float) -> int:
        if self.dt is None:
            return 1
        return max(1, math.ceil((t1 - t0) / self.dt - 1e-9))


class InferenceError(ValueError):
    """Query times incompatible with the trained observation window."""


def _uniform_init(rng, rows, cols):
    bound = math.sqrt(1.0 / rows)
    return Tensor(rng.uniform(-bound, bound, size=(rows, cols)), requires_grad=True)


def _zeros(rows, cols):
    return Tensor(np.zeros((rows, cols)), requires_grad=True)


@dataclass
class GruParams:
    """Gate weights for the observation update; input width w, hidden d."""

    reset_w: Tensor
    reset_u: Tensor
    reset_bw: Tensor
    reset_bu: Tensor
    update_w: Tensor
    update_u: Tensor
    update_bw: Tensor
    update_bu: Tensor
    cand_w: Tensor
    cand_u: Tensor
    cand_bw: Tensor
    cand_bu: Tensor

    @classmethod
    def init(cls, n, in_width, hidden, rng):
        fields = {}
        for gate in ("reset", "update", "cand"):
            fields[f"{gate}_w"] = _uniform_init(rng, in_width, hidden)
            fields[f"{gate}_u"] = _uniform_init(rng, hidden, hidden)
            fields[f"{gate}_bw"] = _zeros(n, hidden)
            fields[f"{gate}_bu"] = _zeros(n, hidden)
        return cls(**fields)

    def named(self, prefix="gru"):
        return {f"{prefix}.{name}": getattr(self, name) for name in
                ("reset_w", "reset_u", "reset_bw", "reset_bu",
                 "update_w", "update_u", "update_bw", "update_bu",
                 "cand_w", "cand_u", "cand_bw", "cand_bu")}


@dataclass
class AgogParams:
    """All trainable tensors plus the (n, k, d, p) hyperparameters."""

    n: int
    k: int
    d: int
    p: int
    enc_weight: Tensor  # k x d
    enc_bias: Tensor  # n x d
    interact_weight: Tensor  # (d+p) x (d+p), neighbor mixing through phi
    self_weight: Tensor  # (d+p) x (d+p)
    self_bias: Tensor  # n x (d+p)
    dec_weight: Tensor  # (d+p) x k
    dec_bias: Tensor  # n x k
    gru: GruParams

    def named_parameters(self) -> dict:
        out = {name: getattr(self, name) for name in
               ("enc_weight", "enc_bias", "interact_weight", "self_weight",
                "self_bias", "dec_weight", "dec_bias")}
        out.update(self.gru.named())
        return out


def init_agog_params(n: int, k: int, d: int, p: int, seed: int) -> AgogParams:
    """Seeded init: weights uniform on +-sqrt(1/fan_in), biases zero."""
    if d < 1 or p < 0:
        raise ValueError(f"need hidden dim >= 1 and augment dim >= 0, got d={d}, p={p}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(10,)))
    w = d + p
    return AgogParams(
        n=n, k=k, d=d, p=p,
        enc_weight=_uniform_init(rng, k, d),
        enc_bias=_zeros(n, d),
        interact_weight=_uniform_init(rng, w, w),
        self_weight=_uniform_init(rng, w, w),
        self_bias=_zeros(n, w),
        dec_weight=_uniform_init(rng, w, k),
        dec_bias=_zeros(n, k),
        gru=GruParams.init(n, w, d, rng),
    )


def encode(x, params) -> Tensor:
    """Affine map from snapshot space (n x k) to hidden space (n x d)."""
    if not isinstance(x, Tensor):
        x = Tensor(x)
    return add(matmul(x, params.enc_weight), params.enc_bias)


def decode(h_any: Tensor, params) -> Tensor:
    """Affine readout from (augmented-width) hidden space back to snapshots."""
    return add(matmul(h_any, params.dec_weight), params.dec_bias)


def augment(h: Tensor, p: int) -> Tensor:
    """Append p zero columns; slice_cols(.., 0, d) recovers h exactly."""
    if p == 0:
        return h
    return concat_cols(h, Tensor(np.zeros((h.shape[0], p))))


def strip_augment(h_a: Tensor, d: int) -> Tensor:
    return slice_cols(h_a, 0, d)


def gnn_ode_rhs(h_a: Tensor, phi: Tensor, params) -> Tensor:
    """Hidden vector field: phi@h_a@W_interact + (h_a@W_self + b_self).

    The first term mixes neighboring hidden states through the normalized
    Laplacian; the second is each node's self-dynamics. Time-autonomous.
    """
    interact = matmul(matmul(phi, h_a), params.interact_weight)
    return add(interact, add(matmul(h_a, params.self_weight), params.self_bias))


def euler_solve(h_a_start: Tensor, t_start: float, t_end: float, phi: Tensor,
                params, policy: StepPolicy) -> Tensor:
    """Explicit Euler from t_start to t_end, recorded on the tape."""
    if t_end <= t_start:
        raise ValueError(f"need t_end > t_start, got ({t_start}, {t_end})")
    m = policy.n_steps(t_start, t_end)
    dt = (t_end - t_start) / m
    h = h_a_start
    for i in range(m):
        h = add(h, scalar_mul(gnn_ode_rhs(h, phi, params), dt))
        if not np.all(np.isfinite(h.data)):
            raise NumericError(f"non-finite hidden state at Euler sub-step {i} "
                               f"of ({t_start:.6g}, {t_end:.6g})")
    return h


def gru_cell(x_in: Tensor, h_prev: Tensor, g: GruParams) -> Tensor:
    """One gated recurrent update.

    reset and update gates read both inputs; the candidate mixes the new
    input with the reset-gated previous state; the output interpolates
    between candidate and previous state, so a saturated update gate returns
    ``h_prev`` unchanged.
    """
    r = sigmoid(add(add(matmul(x_in, g.reset_w), g.reset_bw),
                    add(matmul(h_prev, g.reset_u), g.reset_bu)))
    z = sigmoid(add(add(matmul(x_in, g.update_w), g.update_bw),
                    add(matmul(h_prev, g.update_u), g.update_bu)))
    cand = tanh(add(add(matmul(x_in, g.cand_w), g.cand_bw),
                    mul(r, add(matmul(h_prev, g.cand_u), g.cand_bu))))
    ones = Tensor(np.ones(z.shape))
    return add(mul(sub(ones, z), cand), mul(z, h_prev))


def gru_update(h_pred: Tensor, h_obs: Tensor, params) -> Tensor:
    """Correct the solver output toward an encoded observation; the solver
    state is the cell input, the observation encoding the previous state."""
    return gru_cell(h_pred, h_obs, params.gru)


def train_rollout(times, observations, params, phi: Tensor, policy: StepPolicy,
                  keep_anchors: bool = False):
    """Autoregressive rollout over the observed training subsequence.

    Returns (solver_decodes, corrected_decodes[, anchors]): at index 0 both
    outputs are the decoded augmented encoding of the first snapshot; at
    index i >= 1 the solver decode comes from the Euler solution over
    (t_{i-1}, t_i) and the corrected decode from the GRU-updated, re-augmented
    state. ``anchors`` are the augmented states the next interval starts from.
    """
    times = np.asarray(times, dtype=np.float64)
    if len(times) < 2:
        raise ValueError("rollout needs at least 2 observation times")
    h_obs = [encode(x, params) for x in observations]
    h_a = augment(h_obs[0], params.p)
    first = decode(h_a, params)
    solver_decodes = [first]
    corrected_decodes = [first]
    anchors = [h_a]
    for i in range(1, len(times)):
        h_pred = euler_solve(h_a, times[i - 1], times[i], phi, params, policy)
        h_hat = gru_update(h_pred, h_obs[i], params)
        h_a = augment(h_hat, params.p)
        solver_decodes.append(decode(h_pred, params))
        corrected_decodes.append(decode(h_a, params))
        anchors.append(h_a)
    if keep_anchors:
        return solver_decodes, corrected_decodes, anchors
    return solver_decodes, corrected_decodes


def inference_rollout(params, phi: Tensor, train_times, train_states,
                      query_times, mode: str, policy: StepPolicy) -> np.ndarray:
    """Predict snapshots at query times with frozen parameters.

    interpolation: the rollout runs over the training observations; a query
    inside (t_a, t_b) is answered by solving from the corrected state at t_a
    to the query time and decoding (no GRU update at query times). A query
    equal to a training time decodes that corrected state directly; queries
    after the last training time continue from its corrected state.

    extrapolation: one continuous solve onward from the last corrected
    training state through the sorted query times, decoding at each.
    """
    query_times = np.asarray(query_times, dtype=np.float64)
    train_times = np.asarray(train_times, dtype=np.float64)
    if np.any(np.diff(query_times) < 0):
        raise ValueError("query times must be sorted")
    if query_times.size and query_times[0] < train_times[0]:
        raise InferenceError(f"query at t={query_times[0]:.6g} precedes the first "
                             f"training observation at t={train_times[0]:.6g}")
    if mode not in ("interpolation", "extrapolation"):
        raise ValueError(f"unknown inference mode {mode!r}")
    if mode == "extrapolation" and query_times.size and query_times[0] <= train_times[-1]:
        raise InferenceError("extrapolation queries must follow the last training time")

    with no_grad():
        _, _, anchors = train_rollout(train_times, train_states, params, phi,
                                      policy, keep_anchors=True)
        preds = np.empty((len(query_times), params.n, params.k))
        if mode == "extrapolation":
            h = anchors[-1]
            t_prev = train_times[-1]
            for qi, t in enumerate(query_times):
                h = euler_solve(h, t_prev, t, phi, params, policy)
                preds[qi] = decode(h, params).data
                t_prev = t
            return preds
        for qi, t in enumerate(query_times):
            a = int(np.searchsorted(train_times, t, side="right")) - 1
            anchor_t = train_times[a]
            if t == anchor_t:
                preds[qi] = decode(anchors[a], params).data
            else:
                h = euler_solve(anchors[a], anchor_t, t, phi, params, policy)
                preds[qi] = decode(h, params).data
        return preds
