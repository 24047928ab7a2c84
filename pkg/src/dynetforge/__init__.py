"""dynetforge: learn continuous network dynamics from sparse snapshots.

The package simulates ground-truth dynamics (gene regulation, coupled
oscillators, mutualistic interactions) on generated benchmark networks,
trains the autoregressive GNN-ODE-GRU model (AGOG) and comparison models on
sparse or irregular observations, and evaluates interpolation,
extrapolation, and regular-sequence prediction.
"""

__version__ = "0.1.0"

from .autodiff import NumericError, ShapeError, Tensor, backward, no_grad
from .dynamics import (Dataset, DynamicsSpec, build_dataset, dynamics_rhs,
                       integrate_reference, sample_schedule)
from .graphs import Graph, adjacency, generate_graph, normalized_laplacian
from .optim import Adam, adam_step
from .training import (Checkpoint, EvalReport, TrainConfig, agog_loss, error_over_time,
                       evaluate, run_experiment_matrix, train)

__all__ = [
    "Adam", "adam_step", "backward", "build_dataset", "Checkpoint", "Dataset",
    "DynamicsSpec", "dynamics_rhs", "error_over_time", "EvalReport", "evaluate",
    "generate_graph", "Graph", "adjacency", "integrate_reference", "no_grad",
    "normalized_laplacian", "NumericError", "run_experiment_matrix",
    "sample_schedule", "ShapeError", "Tensor", "TrainConfig", "train",
]
