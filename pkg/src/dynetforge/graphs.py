"""Benchmark network generators and the normalized graph Laplacian.

Five undirected network families are supported: a stochastic-block-model
community network, a square grid lattice, an Erdos-Renyi random network, a
Barabasi-Albert preferential-attachment network ("powerlaw"), and a
Watts-Strogatz small-world network. Generation is deterministic for a fixed
(family, n, params, seed) tuple. Connectivity is never forced; the number of
connected components is recorded on the graph instead.
"""

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

FAMILIES = ("community", "grid", "er", "powerlaw", "smallworld")


@dataclass(frozen=True)
class Graph:
    """An undirected simple graph with generation provenance."""

    n: int
    edges: tuple  # sorted (i, j) pairs with i < j, no duplicates
    family: str
    params: dict = field(compare=False)
    seed: int
    n_components: int = 1

    def __post_init__(self):
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop ({i}, {j}) not allowed")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg


def default_params(family: str, n: int) -> dict:
    """Generator settings used when the caller does not override them."""
    if family == "community":
        return {"blocks": 4, "p_in": 0.25, "p_out": 0.01}
    if family == "grid":
        return {}
    if family == "er":
        # expected mean degree 8 (complete below 10 nodes), sparse but
        # connected w.h.p. at n = 400
        return {"p": min(1.0, 8.0 / (n - 1))}
    if family == "powerlaw":
        return {"m": 2}
    if family == "smallworld":
        return {"k": 4, "p_rewire": 0.1}
    raise ValueError(f"unknown graph family {family!r}, expected one of {FAMILIES}")


def _check_prob(name, value):
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must be a probability in [0, 1], got {value}")


def _edges_from_nx(g: nx.Graph) -> tuple:
    return tuple(sorted((min(i, j), max(i, j)) for i, j in g.edges()))


def generate_graph(family: str, n: int, seed: int, **params) -> Graph:
    """Generate one benchmark network.

    Unspecified parameters fall back to :func:`default_params`. The result is
    bitwise deterministic for identical inputs. The grid family requires a
    perfect-square ``n`` and takes no parameters.
    """
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got n={n}")
    opts = default_params(family, n)
    unknown = set(params) - set(opts)
    if unknown:
        raise ValueError(f"unknown parameters for family {family!r}: {sorted(unknown)}")
    opts.update(params)

    if family == "community":
        blocks = int(opts["blocks"])
        if blocks < 1 or blocks > n:
            raise ValueError(f"blocks must be in [1, n], got {blocks}")
        _check_prob("p_in", opts["p_in"])
        _check_prob("p_out", opts["p_out"])
        sizes = [n // blocks + (1 if b < n % blocks else 0) for b in range(blocks)]
        probs = [[opts["p_in"] if a == b else opts["p_out"] for b in range(blocks)]
                 for a in range(blocks)]
        g = nx.stochastic_block_model(sizes, probs, seed=seed)
        edges = _edges_from_nx(g)
    elif family == "grid":
        s = math.isqrt(n)
        if s * s != n:
            raise ValueError(f"grid family requires a perfect-square node count, got n={n}")
        lattice = []
        for r in range(s):
            for c in range(s):
                v = r * s + c
                if c + 1 < s:
                    lattice.append((v, v + 1))
                if r + 1 < s:
                    lattice.append((v, v + s))
        edges = tuple(sorted(lattice))
    elif family == "er":
        _check_prob("p", opts["p"])
        g = nx.gnp_random_graph(n, opts["p"], seed=seed)
        edges = _edges_from_nx(g)
    elif family == "powerlaw":
        m = int(opts["m"])
        if not (1 <= m < n):
            raise ValueError(f"powerlaw attachment count m must satisfy 1 <= m < n, got {m}")
        g = nx.barabasi_albert_graph(n, m, seed=seed)
        edges = _edges_from_nx(g)
    elif family == "smallworld":
        k = int(opts["k"])
        if not (2 <= k < n):
            raise ValueError(f"smallworld ring degree k must satisfy 2 <= k < n, got {k}")
        _check_prob("p_rewire", opts["p_rewire"])
        g = nx.watts_strogatz_graph(n, k, opts["p_rewire"], seed=seed)
        edges = _edges_from_nx(g)
    else:
        raise ValueError(f"unknown graph family {family!r}, expected one of {FAMILIES}")

    comp = nx.Graph()
    comp.add_nodes_from(range(n))
    comp.add_edges_from(edges)
    return Graph(n=n, edges=edges, family=family, params=opts, seed=seed,
                 n_components=nx.number_connected_components(comp))


def adjacency(g: Graph) -> np.ndarray:
    """Dense symmetric 0/1 adjacency matrix."""
    a = np.zeros((g.n, g.n))
    for i, j in g.edges:
        a[i, j] = 1.0
        a[j, i] = 1.0
    return a


def normalized_laplacian(g: Graph) -> np.ndarray:
    """Symmetric normalized Laplacian D^{-1/2} (D - A) D^{-1/2}.

    Isolated nodes get an all-zero row and column (0^{-1/2} treated as 0), so
    they evolve by self-dynamics only in any model built on this operator.
    Diagonal entries are exactly 1 for nodes with degree >= 1.
    """
    a = adjacency(g)
    deg = a.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    pos = deg > 0
    inv_sqrt[pos] = 1.0 / np.sqrt(deg[pos])
    phi = -(inv_sqrt[:, None] * a * inv_sqrt[None, :])
    np.fill_diagonal(phi, np.where(pos, 1.0, 0.0))
    return phi
