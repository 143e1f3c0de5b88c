"""Radius-based interaction graphs and the consensus operators built on them.

Every agent is its own neighbour (its distance to itself is zero, which is
within any range ``rho >= 0``), so degrees are at least one and the Perron
matrix ``P = I - D^-1 L`` is exactly the neighbour-mean operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from .errors import InputError

NORMS = {"euclidean": "euclidean", "chebyshev": "chebyshev", "cityblock": "cityblock"}


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def as_points(positions) -> np.ndarray:
    """Coerce ``positions`` to an ``(n, d)`` float array.

    A flat sequence is read as ``n`` one-dimensional points.
    """
    try:
        pts = np.asarray(positions, dtype=float)
    except ValueError as exc:
        raise InputError(f"points do not share one dimension: {exc}") from None
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise InputError(f"expected a list of points, got array of shape {pts.shape}")
    return pts


@dataclass(frozen=True, eq=False)
class InteractionGraph:
    """Undirected range graph with self-loops.

    Attributes
    ----------
    n : int
        Number of agents.
    rho : float
        Interaction range used to build the graph.
    adjacency : ndarray of bool, shape (n, n)
        ``adjacency[i, j]`` is true iff agents ``i`` and ``j`` are within ``rho``.
        The diagonal is always true.
    neighbor_counts : ndarray of int, shape (n,)
        Size of each neighbourhood, self included.
    """

    n: int
    rho: float
    adjacency: np.ndarray
    neighbor_counts: np.ndarray


@dataclass(frozen=True, eq=False)
class ComponentLabeling:
    labels: np.ndarray
    count: int

    def groups(self) -> list[np.ndarray]:
        """Agent indices of each component, ordered by label."""
        return [np.flatnonzero(self.labels == k) for k in range(self.count)]


@dataclass(frozen=True, eq=False)
class ConsensusMatrices:
    degree: np.ndarray
    laplacian: np.ndarray
    perron: np.ndarray


def pairwise_distances(points: np.ndarray, norm: str = "euclidean") -> np.ndarray:
    if norm not in NORMS:
        raise InputError(f"unknown norm {norm!r}; choose from {sorted(NORMS)}")
    if points.shape[1] == 1:
        x = points[:, 0]
        return np.abs(x[:, None] - x[None, :])
    return cdist(points, points, metric=NORMS[norm])


def build_graph(positions, rho: float, norm: str = "euclidean") -> InteractionGraph:
    """Connect every pair of agents whose distance is at most ``rho``.

    Parameters
    ----------
    positions : array_like, shape (n,) or (n, d)
        Agent positions. A flat array is treated as one-dimensional states,
        where every norm reduces to the absolute difference.
    rho : float
        Interaction range, inclusive.
    norm : {"euclidean", "chebyshev", "cityblock"}
        Distance used for ``d >= 2``.
    """
    if not rho >= 0:
        raise InputError(f"rho must be >= 0, got {rho}")
    pts = as_points(positions)
    adjacency = pairwise_distances(pts, norm) <= rho
    # Guards the self-loop convention even for non-finite coordinates.
    np.fill_diagonal(adjacency, True)
    counts = adjacency.sum(axis=1)
    return InteractionGraph(
        n=pts.shape[0],
        rho=float(rho),
        adjacency=_frozen(adjacency),
        neighbor_counts=_frozen(counts),
    )


def _sparse_labels(adjacency: np.ndarray, counts: np.ndarray) -> tuple[int, np.ndarray]:
    n = adjacency.shape[0]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.nonzero(adjacency)[1]
    matrix = csr_matrix((np.ones(indices.size, dtype=np.int8), indices, indptr), shape=(n, n))
    count, labels = connected_components(matrix, directed=False)
    return int(count), labels


def _dense_labels(adjacency: np.ndarray) -> tuple[int, np.ndarray]:
    # Frontier BFS over boolean rows; cheap when components are few and large.
    n = adjacency.shape[0]
    labels = np.full(n, -1, dtype=np.int32)
    count = 0
    for seed in range(n):
        if labels[seed] >= 0:
            continue
        reached = adjacency[seed].copy()
        frontier = reached
        while True:
            grown = reached | adjacency[frontier].any(axis=0)
            frontier = grown & ~reached
            if not frontier.any():
                break
            reached = grown
        labels[reached] = count
        count += 1
    return count, labels


def components(graph: InteractionGraph) -> ComponentLabeling:
    """Connected components; labels are numbered in order of each component's lowest index."""
    counts = graph.neighbor_counts
    if counts.min() == graph.n:
        count, labels = 1, np.zeros(graph.n, dtype=np.int32)
    elif counts.mean() > 16:
        count, labels = _dense_labels(graph.adjacency)
    else:
        count, labels = _sparse_labels(graph.adjacency, counts)
    return ComponentLabeling(labels=_frozen(labels), count=int(count))


def consensus_matrices(graph: InteractionGraph) -> ConsensusMatrices:
    adjacency = graph.adjacency.astype(float)
    counts = graph.neighbor_counts.astype(float)
    degree = np.diag(counts)
    laplacian = degree - adjacency
    perron = np.eye(graph.n) - laplacian / counts[:, None]
    return ConsensusMatrices(
        degree=_frozen(degree), laplacian=_frozen(laplacian), perron=_frozen(perron)
    )


def neighbor_average(graph: InteractionGraph, state) -> np.ndarray:
    """Mean of ``state`` over each agent's neighbourhood (self included).

    ``state`` may be a vector of length ``n`` or an ``(n, d)`` array; the
    result has the same shape. Agents with identical neighbourhoods get
    bit-identical results, so a complete component reaches exact consensus.
    """
    values = np.asarray(state, dtype=float)
    if values.shape[0] != graph.n:
        raise InputError(f"state has {values.shape[0]} rows, graph has {graph.n} agents")
    # Row-wise masked sums rather than a BLAS product: BLAS may order the
    # accumulation differently for identical rows.
    adj = graph.adjacency
    if values.ndim == 1:
        return np.where(adj, values, 0.0).sum(axis=1) / graph.neighbor_counts
    cols = [np.where(adj, values[:, k], 0.0).sum(axis=1) for k in range(values.shape[1])]
    return np.column_stack(cols) / graph.neighbor_counts[:, None]
