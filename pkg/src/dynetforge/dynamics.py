"""Ground-truth network dynamics, reference integration, and dataset assembly.

Three node-state dynamics from the systems-biology / physics / ecology
literature run on a generated network:

  gene         dz_i/dt = -b_i z_i + sum_j A_ij z_j^h / (z_j^h + 1)
  kuramoto     dz_i/dt = omega_i + k_i sum_j A_ij sin(z_i - z_j)
  mutualistic  dz_i/dt = -b_i + z_i (1 - z_i/k_i)(z_i/c_i - 1)
                          + sum_j A_ij z_i z_j / (d_i + e_i z_i + h_j z_j)

The Kuramoto coupling is sin(z_i - z_j), which repels rather than attracts
phases; set the ``classical_sign`` coefficient to flip it to the attractive
convention. Ground truth is integrated with the adaptive Dormand-Prince 5(4)
method and sampled on either an irregular (120 snapshots) or a regular
(80 snapshots) observation schedule.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .autodiff import NumericError
from .graphs import Graph, adjacency, generate_graph

DYNAMICS = ("gene", "kuramoto", "mutualistic")

# protocol constants: snapshot counts and split sizes
IRREGULAR_COUNT = 120
IRREGULAR_POOL = 100  # first indices eligible for train / interpolation-test
REGULAR_COUNT = 80
REGULAR_TRAIN = 64

DEFAULT_HORIZONS = {"gene": 5.0, "kuramoto": 10.0, "mutualistic": 5.0}

MIN_GAP_FRACTION = 1e-4  # minimum spacing between irregular snapshots, as a horizon fraction
DENOM_GUARD = 1e-8  # mutualistic interaction denominators are clamped away from zero


@dataclass
class DynamicsSpec:
    """One dynamics model bound to per-node coefficient vectors.

    ``coeffs`` maps coefficient names to length-n arrays (or scalars for the
    gene hill exponent and the Kuramoto sign flag). ``state_dim`` columns
    evolve independently under the same coefficients; the benchmarks use 1.
    """

    name: str
    coeffs: dict = field(default_factory=dict)
    state_dim: int = 1

    def __post_init__(self):
        if self.name not in DYNAMICS:
            raise ValueError(f"unknown dynamics {self.name!r}, expected one of {DYNAMICS}")
        if self.state_dim < 1:
            raise ValueError("state_dim must be >= 1")


def default_spec(name: str, n: int, seed: int, state_dim: int = 1,
                 overrides: dict | None = None) -> DynamicsSpec:
    """Coefficient defaults; Kuramoto natural frequencies are seeded draws."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    ones = np.ones(n)
    if name == "gene":
        coeffs = {"decay": ones.copy(), "hill": 2.0}
    elif name == "kuramoto":
        coeffs = {"omega": rng.standard_normal(n), "coupling": ones.copy(),
                  "classical_sign": 0.0}
    elif name == "mutualistic":
        coeffs = {"b": 0.1 * ones, "k": 5.0 * ones, "c": 1.0 * ones,
                  "d": 5.0 * ones, "e": 0.9 * ones, "h": 0.1 * ones}
    else:
        raise ValueError(f"unknown dynamics {name!r}, expected one of {DYNAMICS}")
    if overrides:
        unknown = set(overrides) - set(coeffs)
        if unknown:
            raise ValueError(f"unknown coefficients for {name!r}: {sorted(unknown)}")
        for key, value in overrides.items():
            if np.isscalar(coeffs[key]):
                coeffs[key] = float(value)
            elif np.isscalar(value):
                coeffs[key] = np.full(n, float(value))
            else:
                coeffs[key] = np.asarray(value, dtype=np.float64)
    return DynamicsSpec(name=name, coeffs=coeffs, state_dim=state_dim)


def initial_state(name: str, n: int, state_dim: int, seed: int) -> np.ndarray:
    """Seeded simulation initial condition at time 0.

    Uniform on [0, 5) for gene states and [0, 2*pi) for Kuramoto phases.
    Mutualistic abundances start on [1, 5): states below the z = 1 growth
    threshold can be dragged through the interaction-denominator singularity
    by high-abundance neighbors (finite-time escape), while any connected
    node at z = 1 has strictly positive derivative under the default
    coefficients, so trajectories started above the threshold stay regular.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2,)))
    if name == "kuramoto":
        return rng.uniform(0.0, 2.0 * np.pi, size=(n, state_dim))
    if name == "mutualistic":
        return rng.uniform(1.0, 5.0, size=(n, state_dim))
    return rng.uniform(0.0, 5.0, size=(n, state_dim))


def dynamics_rhs(spec: DynamicsSpec, adj: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Time derivative of the (n, k) state under the governing equations."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z.reshape(-1, 1)
    if not np.all(np.isfinite(z)):
        raise NumericError(f"non-finite state passed to {spec.name} dynamics")
    c = spec.coeffs
    if spec.name == "gene":
        sat = z ** c["hill"]
        sat = sat / (sat + 1.0)
        return -c["decay"][:, None] * z + adj @ sat
    if spec.name == "kuramoto":
        sign = -1.0 if c.get("classical_sign") else 1.0
        out = np.empty_like(z)
        for col in range(z.shape[1]):
            zc = z[:, col]
            # pairwise sin(z_i - z_j), masked by adjacency
            diff = np.sin(sign * (zc[:, None] - zc[None, :]))
            out[:, col] = c["omega"] + c["coupling"] * (adj * diff).sum(axis=1)
        return out
    # mutualistic
    out = np.empty_like(z)
    for col in range(z.shape[1]):
        zc = z[:, col]
        growth = zc * (1.0 - zc / c["k"]) * (zc / c["c"] - 1.0)
        denom = c["d"][:, None] + c["e"][:, None] * zc[:, None] + c["h"][None, :] * zc[None, :]
        denom = np.where(np.abs(denom) < DENOM_GUARD,
                         np.where(denom < 0.0, -DENOM_GUARD, DENOM_GUARD), denom)
        coupling = (adj * (zc[:, None] * zc[None, :] / denom)).sum(axis=1)
        out[:, col] = -c["b"] + growth + coupling
    return out


def integrate_reference(spec: DynamicsSpec, adj: np.ndarray, z0: np.ndarray,
                        t_eval, rtol=1e-8, atol=1e-10, t0: float = 0.0) -> np.ndarray:
    """Integrate the ground truth with adaptive Dormand-Prince 5(4).

    Returns states of shape (len(t_eval), n, k) at the requested sorted times.
    Local error is controlled by rtol/atol; a solver breakdown (step-size
    underflow on a blow-up) raises with the failing time.
    """
    t_eval = np.asarray(t_eval, dtype=np.float64)
    if t_eval.ndim != 1 or np.any(np.diff(t_eval) <= 0):
        raise ValueError("t_eval must be a 1-D strictly increasing array")
    if rtol <= 0 or atol <= 0:
        raise ValueError("tolerances must be positive")
    z0 = np.asarray(z0, dtype=np.float64)
    shape = z0.shape

    def rhs(t, y):
        return dynamics_rhs(spec, adj, y.reshape(shape)).ravel()

    sol = solve_ivp(rhs, (t0, float(t_eval[-1])), z0.ravel(), method="RK45",
                    t_eval=t_eval, rtol=rtol, atol=atol)
    if not sol.success:
        reached = sol.t[-1] if sol.t.size else t0
        raise NumericError(f"reference integration failed near t={reached:.6g}: {sol.message}")
    return sol.y.T.reshape(len(t_eval), *shape)


def sample_schedule(protocol: str, horizon: float, count: int, seed: int) -> np.ndarray:
    """Observation timestamps for one trajectory.

    regular: count equally spaced times from 0 to horizon inclusive.
    irregular: count i.i.d. uniform draws on (0, horizon], sorted, with a
    minimum spacing of horizon*1e-4 enforced by nudging colliding draws.
    The first draw is the first observation time (no forced t = 0).
    """
    if count < 2:
        raise ValueError("need at least 2 observation times")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if protocol == "regular":
        return np.linspace(0.0, horizon, count)
    if protocol != "irregular":
        raise ValueError(f"unknown protocol {protocol!r}")
    gap = horizon * MIN_GAP_FRACTION
    if count * gap > horizon:
        raise ValueError(f"cannot fit {count} samples with minimum gap {gap:g} "
                         f"inside horizon {horizon:g}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(3,)))
    t = np.sort((1.0 - rng.random(count)) * horizon)  # draws in (0, horizon]
    t[0] = max(t[0], gap)
    for i in range(1, count):
        if t[i] - t[i - 1] < gap:
            t[i] = t[i - 1] + gap
    # pushing forward can overshoot the horizon; clamp back, preserving gaps
    for i in range(count - 1, -1, -1):
        limit = horizon - (count - 1 - i) * gap
        if t[i] > limit:
            t[i] = limit
        else:
            break
    return t


@dataclass
class Dataset:
    """A simulated trajectory sampled on a schedule, with split labels.

    ``split`` holds one of "train", "interp_test", "extrap_test" per
    timestamp. ``states[0]`` is the first observed snapshot; the simulation
    initial condition at time 0 is kept in ``meta["z_init"]`` so the file is
    self-contained and re-integrable.
    """

    graph: Graph
    dynamics: DynamicsSpec
    timestamps: np.ndarray
    states: np.ndarray
    split: list
    schedule: str
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def x0(self) -> np.ndarray:
        return self.states[0]

    @property
    def horizon(self) -> float:
        return float(self.meta["horizon"])

    def indices(self, label: str) -> np.ndarray:
        return np.array([i for i, s in enumerate(self.split) if s == label], dtype=np.int64)

    def has_label(self, label: str) -> bool:
        return label in self.split


def _split_labels(protocol: str, count: int, train_frac: float, seed: int) -> list:
    if protocol == "regular":
        return ["train"] * REGULAR_TRAIN + ["extrap_test"] * (count - REGULAR_TRAIN)
    n_train = int(round(IRREGULAR_POOL * train_frac))
    if not (1 <= n_train <= IRREGULAR_POOL):
        raise ValueError(f"train fraction {train_frac} gives {n_train} train points")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(4,)))
    # index 0 always trains: every method needs the shared initial snapshot
    picks = {0}
    picks.update(rng.choice(np.arange(1, IRREGULAR_POOL), size=n_train - 1, replace=False))
    labels = []
    for i in range(count):
        if i >= IRREGULAR_POOL:
            labels.append("extrap_test")
        elif i in picks:
            labels.append("train")
        else:
            labels.append("interp_test")
    return labels


def build_dataset(family: str, dyn_name: str, n: int, protocol: str,
                  train_frac: float = 0.1, seed: int = 0, horizon: float | None = None,
                  rtol: float = 1e-8, atol: float = 1e-10,
                  graph_params: dict | None = None,
                  coeff_overrides: dict | None = None) -> Dataset:
    """Simulate one benchmark trajectory and label its observation splits.

    Deterministic for fixed arguments; every model trains and evaluates on
    the same dataset object (or its serialized file).
    """
    if protocol not in ("irregular", "regular"):
        raise ValueError(f"unknown protocol {protocol!r}")
    if horizon is None:
        horizon = DEFAULT_HORIZONS[dyn_name] if dyn_name in DEFAULT_HORIZONS else 5.0
    graph_seed = int(np.random.SeedSequence(seed, spawn_key=(0,)).generate_state(1)[0])
    graph = generate_graph(family, n, graph_seed, **(graph_params or {}))
    spec = default_spec(dyn_name, n, seed, overrides=coeff_overrides)
    z_init = initial_state(dyn_name, n, spec.state_dim, seed)

    count = REGULAR_COUNT if protocol == "regular" else IRREGULAR_COUNT
    times = sample_schedule(protocol, horizon, count, seed)
    adj = adjacency(graph)
    if times[0] > 0.0:
        states = integrate_reference(spec, adj, z_init, times, rtol=rtol, atol=atol)
    else:
        states = np.empty((count, n, spec.state_dim))
        states[0] = z_init
        states[1:] = integrate_reference(spec, adj, z_init, times[1:], rtol=rtol, atol=atol)

    split = _split_labels(protocol, count, train_frac, seed)
    meta = {
        "horizon": float(horizon),
        "rtol": float(rtol),
        "atol": float(atol),
        "train_frac": float(train_frac) if protocol == "irregular" else None,
        "z_init": z_init,
    }
    return Dataset(graph=graph, dynamics=spec, timestamps=times, states=states,
                   split=split, schedule=protocol, seed=seed, meta=meta)
