"""Attributed graph container, GCN adjacency normalization and neighbourhood queries.

Graphs are undirected and stored in CSR form with both directions of every
edge present. Neighbour lists are sorted so iteration order is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (
    EndpointOutOfRange,
    FeatureShapeMismatch,
    NodeOutOfRange,
    NonFiniteFeature,
)


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected attributed graph.

    Attributes
    ----------
    indptr, indices : ndarray of int64
        CSR adjacency, symmetric, no self-loops, column indices sorted per row.
    features : ndarray, shape (N, F)
        Node attribute matrix.
    labels : ndarray of int8 or None
        Ground truth, 1 = anomaly and 0 = normal.
    """

    indptr: np.ndarray
    indices: np.ndarray
    features: np.ndarray
    labels: np.ndarray | None = None
    name: str = "graph"
    _csr: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    @property
    def num_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def adjacency_matrix(self) -> sp.csr_matrix:
        """0/1 adjacency as a scipy CSR matrix (cached)."""
        if self._csr is None:
            n = self.num_nodes
            data = np.ones(len(self.indices), dtype=np.float64)
            m = sp.csr_matrix((data, self.indices, self.indptr), shape=(n, n))
            object.__setattr__(self, "_csr", m)
        return self._csr

    def edge_array(self) -> np.ndarray:
        """Undirected edges as an (m, 2) array with u < v, lexicographically sorted."""
        src = np.repeat(np.arange(self.num_nodes), self.degrees)
        keep = src < self.indices
        return np.stack([src[keep], self.indices[keep]], axis=1)

    def directed_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Both directions of every edge as (src, dst), CSR order."""
        src = np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees)
        return src, self.indices

    def same_as(self, other: "Graph") -> bool:
        return (
            np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.features, other.features)
            and (
                (self.labels is None and other.labels is None)
                or (
                    self.labels is not None
                    and other.labels is not None
                    and np.array_equal(self.labels, other.labels)
                )
            )
        )


def build_graph(edges, features, labels=None, name="graph") -> Graph:
    """Build a symmetrized, deduplicated, self-loop-free :class:`Graph`.

    ``edges`` may list each undirected edge once, twice, or repeatedly; input
    direction is ignored. Self-loops in the input are dropped.
    """
    x = np.array(features, dtype=np.float64, copy=True)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2:
        raise FeatureShapeMismatch(f"features must be 2-D, got shape {x.shape}")
    n = x.shape[0]
    if not np.all(np.isfinite(x)):
        raise NonFiniteFeature("features contain NaN or inf")

    e = np.asarray(edges, dtype=np.int64)
    if e.size == 0:
        e = e.reshape(0, 2)
    if e.ndim != 2 or e.shape[1] != 2:
        raise ValueError(f"edges must be pairs, got shape {e.shape}")
    if len(e) and (e.min() < 0 or e.max() >= n):
        bad = e[(e < 0).any(axis=1) | (e >= n).any(axis=1)][0]
        raise EndpointOutOfRange(f"edge ({bad[0]}, {bad[1]}) outside [0, {n})")

    e = e[e[:, 0] != e[:, 1]]
    both = np.concatenate([e, e[:, ::-1]], axis=0)
    key = np.unique(both[:, 0] * n + both[:, 1]) if len(both) else np.zeros(0, np.int64)
    src, dst = key // n, key % n
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])

    y = None
    if labels is not None:
        y = np.asarray(labels).astype(np.int8)
        if y.shape != (n,):
            raise FeatureShapeMismatch(f"labels must have shape ({n},), got {y.shape}")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        y = _readonly(y)

    return Graph(
        indptr=_readonly(indptr),
        indices=_readonly(dst.astype(np.int64)),
        features=_readonly(x),
        labels=y,
        name=name,
    )


@dataclass(frozen=True, eq=False)
class NormalizedAdjacency:
    """``D~^-1/2 (A + I) D~^-1/2`` with ``D~ = D + I``.

    ``degrees`` always holds the raw degrees of the full graph, so restricting
    to a node subset keeps every weight unchanged.
    """

    matrix: sp.csr_matrix
    degrees: np.ndarray

    @property
    def num_nodes(self) -> int:
        return self.matrix.shape[0]

    def restrict(self, nodes) -> "NormalizedAdjacency":
        """Rows/columns of ``nodes`` (sorted ascending) with the original weights."""
        nodes = np.asarray(nodes, dtype=np.int64)
        sub = self.matrix[nodes][:, nodes].tocsr()
        sub.sort_indices()
        return NormalizedAdjacency(matrix=sub, degrees=_readonly(self.degrees[nodes].copy()))

    def todense(self) -> np.ndarray:
        return self.matrix.toarray()


def normalize_adjacency(g: Graph) -> NormalizedAdjacency:
    n = g.num_nodes
    deg = g.degrees.astype(np.int64)
    inv_sqrt = 1.0 / np.sqrt(deg + 1.0)
    a = g.adjacency_matrix() + sp.identity(n, format="csr")
    a = a.tocsr()
    a.sort_indices()
    rows = np.repeat(np.arange(n), np.diff(a.indptr))
    a.data = inv_sqrt[rows] * inv_sqrt[a.indices]
    return NormalizedAdjacency(matrix=a, degrees=_readonly(deg))


def _check_node(g: Graph, v) -> int:
    v = int(v)
    if v < 0 or v >= g.num_nodes:
        raise NodeOutOfRange(f"node {v} outside [0, {g.num_nodes})")
    return v


def ego_network(g: Graph, v) -> list[int]:
    """Direct neighbours of ``v`` in ascending order (``v`` itself excluded)."""
    v = _check_node(g, v)
    return g.neighbors(v).tolist()


def khop_closure(g: Graph, seeds, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes within ``k`` hops of any seed, and the edges they induce.

    Returns
    -------
    nodes : ndarray
        Sorted node ids.
    edges : ndarray, shape (e, 2)
        Induced undirected edges with ``u < v``, sorted lexicographically.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    seeds = np.unique(np.asarray(list(seeds) if not isinstance(seeds, np.ndarray) else seeds,
                                 dtype=np.int64))
    if seeds.size == 0:
        raise ValueError("seeds must be non-empty")
    for s in (seeds[0], seeds[-1]):
        _check_node(g, s)

    adj = g.adjacency_matrix()
    inside = np.zeros(g.num_nodes, dtype=bool)
    inside[seeds] = True
    frontier = inside.copy()
    for _ in range(k):
        reached = (adj @ frontier.astype(np.float64)) > 0
        frontier = reached & ~inside
        if not frontier.any():
            break
        inside |= frontier
    nodes = np.flatnonzero(inside)

    sub = adj[nodes][:, nodes].tocoo()
    keep = sub.row < sub.col
    edges = np.stack([nodes[sub.row[keep]], nodes[sub.col[keep]]], axis=1)
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    return nodes, edges[order]
