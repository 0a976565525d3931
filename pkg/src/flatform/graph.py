"""Directed graphs, incidence/Laplacian matrices and Kronecker helpers.

Vertices are 0-based internally. Configuration files use 1-based labels;
:meth:`DirectedGraph.from_one_based` is the single conversion point.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .errors import ConfigError, InvalidWeightError


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DirectedGraph:
    """Directed graph with a stable edge order.

    The position of an edge in ``edges`` is its column in the incidence matrix
    and its diagonal slot in every weight matrix.
    """

    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ConfigError("graph needs at least one vertex", key="n_uavs")
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        seen = set()
        for i, j in edges:
            if not (0 <= i < self.vertex_count and 0 <= j < self.vertex_count):
                raise ConfigError(f"edge ({i + 1},{j + 1}) references a missing vertex",
                                  key="edges")
            if i == j:
                raise ConfigError(f"self-loop on vertex {i + 1}", key="edges")
            if (i, j) in seen:
                raise ConfigError(f"duplicate edge ({i + 1},{j + 1})", key="edges")
            seen.add((i, j))
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_one_based(cls, vertex_count, edges):
        return cls(vertex_count, tuple((i - 1, j - 1) for i, j in edges))

    @classmethod
    def complete(cls, vertex_count):
        """Complete directed graph: every ordered pair (i, j), i != j."""
        return cls(vertex_count, tuple(permutations(range(vertex_count), 2)))

    @property
    def edge_count(self):
        return len(self.edges)

    def one_based_edges(self):
        return [(i + 1, j + 1) for i, j in self.edges]

    def undirected_neighbors(self):
        nbrs = [set() for _ in range(self.vertex_count)]
        for i, j in self.edges:
            nbrs[i].add(j)
            nbrs[j].add(i)
        return nbrs

    def is_connected(self):
        """BFS over the undirected support."""
        nbrs = self.undirected_neighbors()
        seen = {0}
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for w in nbrs[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == self.vertex_count

    def reachable_from(self, root):
        out = [[] for _ in range(self.vertex_count)]
        for i, j in self.edges:
            out[i].append(j)
        seen = {root}
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in out[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen

    def globally_reachable_nodes(self):
        """Nodes with a directed path to every other node."""
        return [v for v in range(self.vertex_count)
                if len(self.reachable_from(v)) == self.vertex_count]

    def has_all_ordered_pairs(self):
        edges = set(self.edges)
        return all(p in edges for p in permutations(range(self.vertex_count), 2))


def incidence_matrix(g: DirectedGraph) -> np.ndarray:
    """N x |E| incidence matrix: +1 at the tail row, -1 at the head row."""
    D = np.zeros((g.vertex_count, g.edge_count))
    for k, (i, j) in enumerate(g.edges):
        D[i, k] = 1.0
        D[j, k] = -1.0
    return D


def _check_weights(g, w, name="weights"):
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape != (g.edge_count,):
        raise ConfigError(f"expected {g.edge_count} {name}, got {w.size}", key=name)
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise InvalidWeightError(f"{name} must be finite and strictly positive", key=name)
    return w


def weighted_laplacian(g: DirectedGraph, w) -> np.ndarray:
    """L = D W D^T for strictly positive edge weights ``w``."""
    w = _check_weights(g, w)
    D = incidence_matrix(g)
    return (D * w) @ D.T


def kron_identity(y, m: int) -> np.ndarray:
    """Y (x) I_m, i.e. the block matrix with blocks y_ij * I_m."""
    return np.kron(np.atleast_2d(np.asarray(y, dtype=float)), np.eye(m))


@dataclass(frozen=True)
class FormationSpec:
    """Formation and communication graphs with all planning weights.

    ``offsets[k]`` is the desired ``p_i - p_j`` for formation edge ``k = (i, j)``.
    """

    formation_graph: DirectedGraph
    mu: np.ndarray
    omega: np.ndarray
    offsets: np.ndarray
    gamma: np.ndarray
    communication_graph: DirectedGraph = field(default=None)

    def __post_init__(self):
        g = self.formation_graph
        n = g.vertex_count
        if self.communication_graph is None:
            object.__setattr__(self, "communication_graph", DirectedGraph.complete(n))
        if g.edge_count == 0 and n > 1:
            raise ConfigError("formation graph has no edges; connectivity "
                              "(Assumption 1) cannot hold", key="edges")
        if not g.is_connected():
            raise ConfigError("formation graph is not connected (Assumption 1)", key="edges")
        if not g.globally_reachable_nodes():
            raise ConfigError("formation graph has no globally reachable node "
                              "(Assumption 1)", key="edges")
        c = self.communication_graph
        if c.vertex_count != n or not c.has_all_ordered_pairs():
            raise ConfigError("communication graph must be complete (Assumption 2)",
                              key="communication")
        object.__setattr__(self, "mu", _frozen(_check_weights(g, self.mu, "mu")))
        object.__setattr__(self, "omega", _frozen(_check_weights(g, self.omega, "omega")))
        offsets = np.asarray(self.offsets, dtype=float)
        if offsets.shape != (g.edge_count, 3):
            raise ConfigError(f"offsets must have shape ({g.edge_count}, 3), "
                              f"got {offsets.shape}", key="offsets")
        object.__setattr__(self, "offsets", _frozen(offsets))
        gamma = np.asarray(self.gamma, dtype=float).reshape(-1)
        if gamma.shape != (n,):
            raise ConfigError(f"expected {n} gamma values, got {gamma.size}", key="gamma")
        if not np.all(np.isfinite(gamma)) or np.any(gamma <= 0):
            raise InvalidWeightError("gamma must be strictly positive", key="gamma")
        object.__setattr__(self, "gamma", _frozen(gamma))

    @property
    def n_uavs(self):
        return self.formation_graph.vertex_count

    def incident_mean(self, weights):
        """Mean of per-edge ``weights`` over the formation edges touching each vertex."""
        n = self.n_uavs
        total = np.zeros(n)
        count = np.zeros(n)
        for k, (i, j) in enumerate(self.formation_graph.edges):
            for v in (i, j):
                total[v] += weights[k]
                count[v] += 1
        out = np.ones(n)
        mask = count > 0
        out[mask] = total[mask] / count[mask]
        return out
