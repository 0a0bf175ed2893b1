"""Immutable undirected simple graphs and their Laplacian matrices.

Graphs are stored in compressed sparse row form over 0-based node indices.
Three Laplacian variants are supported:

* unnormalized   L = D - A
* normalized     L = I - D^(-1/2) A D^(-1/2), with D^(-1/2)_ii = 0 for
  isolated nodes (their row reduces to the bare diagonal 1)
* signless       Q = D + A
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from spectralgap import kernels


class GraphConstructionError(ValueError):
    pass


class LaplacianVariant(Enum):
    UNNORMALIZED = "unnormalized"
    NORMALIZED = "normalized"
    SIGNLESS = "signless"


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph: deduplicated edges, no self-loops.

    ``edges`` holds each undirected edge once as (u, v) with u < v;
    ``indptr``/``indices`` form the symmetric CSR adjacency.
    ``self_loops_removed`` records how many self-loops were dropped during
    construction (sanitation warning count).
    """

    num_nodes: int
    edges: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    node_attributes: np.ndarray | None = None
    self_loops_removed: int = 0

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, node: int) -> np.ndarray:
        return self.indices[self.indptr[node]:self.indptr[node + 1]]

    def with_attributes(self, attributes: np.ndarray) -> "Graph":
        attributes = np.ascontiguousarray(attributes, dtype=np.float64)
        if attributes.ndim != 2 or attributes.shape[0] != self.num_nodes:
            raise ValueError(
                f"attribute matrix must have {self.num_nodes} rows, got shape {attributes.shape}"
            )
        attributes.setflags(write=False)
        return Graph(self.num_nodes, self.edges, self.indptr, self.indices,
                     attributes, self.self_loops_removed)


@dataclass(frozen=True)
class SparseSymMatrix:
    """Symmetric real matrix in CSR form (double precision)."""

    dim: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    @property
    def nnz(self) -> int:
        return self.data.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if x.shape[0] != self.dim:
            raise ValueError(f"vector length {x.shape[0]} does not match dim {self.dim}")
        x = np.ascontiguousarray(x, dtype=np.float64)
        return kernels.csr_matvec(self.indptr, self.indices, self.data, x)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.dim, self.dim))
        for i in range(self.dim):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            dense[i, self.indices[lo:hi]] = self.data[lo:hi]
        return dense

    def norm1(self) -> float:
        """Maximum absolute row sum (equals the 2-norm bound used for scaling)."""
        if self.nnz == 0:
            return 0.0
        nonempty = np.diff(self.indptr) > 0
        sums = np.add.reduceat(np.abs(self.data), self.indptr[:-1][nonempty])
        return float(sums.max())


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def build_graph(num_nodes: int, edge_list, node_attributes=None) -> Graph:
    """Construct a canonical Graph from an edge list.

    Duplicate edges (including reversed duplicates) are collapsed and
    self-loops dropped; the count of dropped self-loops is recorded on the
    graph. Endpoints outside ``range(num_nodes)`` raise
    :class:`GraphConstructionError` naming the offending edge.
    """
    if num_nodes < 0:
        raise GraphConstructionError(f"num_nodes must be non-negative, got {num_nodes}")
    pairs = np.asarray(list(edge_list), dtype=np.int64).reshape(-1, 2)
    if pairs.size:
        bad = (pairs < 0) | (pairs >= num_nodes)
        if bad.any():
            u, v = pairs[bad.any(axis=1)][0]
            raise GraphConstructionError(
                f"edge ({u}, {v}) has an endpoint outside range(0, {num_nodes})")

    loops = pairs[:, 0] == pairs[:, 1] if pairs.size else np.zeros(0, dtype=bool)
    self_loops_removed = int(loops.sum())
    pairs = pairs[~loops]
    if pairs.size:
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        edges = np.unique(np.stack([lo, hi], axis=1), axis=0)
    else:
        edges = np.zeros((0, 2), dtype=np.int64)

    # symmetric CSR adjacency from both edge directions
    if edges.size:
        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        indptr = np.zeros(num_nodes + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        indices = cols
    else:
        indptr = np.zeros(num_nodes + 1, dtype=np.int64)
        indices = np.zeros(0, dtype=np.int64)

    graph = Graph(
        num_nodes=int(num_nodes),
        edges=_freeze(edges),
        indptr=_freeze(indptr),
        indices=_freeze(indices),
        self_loops_removed=self_loops_removed,
    )
    if node_attributes is not None:
        graph = graph.with_attributes(np.asarray(node_attributes, dtype=np.float64))
    return graph


def laplacian(graph: Graph, variant: LaplacianVariant = LaplacianVariant.UNNORMALIZED) -> SparseSymMatrix:
    """Assemble the requested Laplacian variant in CSR form."""
    n = graph.num_nodes
    deg = graph.degrees.astype(np.float64)

    if variant is LaplacianVariant.UNNORMALIZED:
        diag = deg
        off_scale = None
        off_sign = -1.0
    elif variant is LaplacianVariant.SIGNLESS:
        diag = deg
        off_scale = None
        off_sign = 1.0
    elif variant is LaplacianVariant.NORMALIZED:
        inv_sqrt = np.zeros(n)
        nz = deg > 0
        inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
        diag = np.ones(n)
        off_scale = inv_sqrt
        off_sign = -1.0
    else:  # pragma: no cover - exhaustive enum
        raise ValueError(f"unknown Laplacian variant {variant!r}")

    # merge adjacency entries with the diagonal, sorted by (row, col)
    adj_rows = np.repeat(np.arange(n, dtype=np.int64), graph.degrees)
    adj_cols = graph.indices
    if off_scale is None:
        adj_vals = np.full(adj_cols.shape[0], off_sign)
    else:
        adj_vals = off_sign * off_scale[adj_rows] * off_scale[adj_cols]

    rows = np.concatenate([adj_rows, np.arange(n, dtype=np.int64)])
    cols = np.concatenate([adj_cols, np.arange(n, dtype=np.int64)])
    vals = np.concatenate([adj_vals, diag])
    order = np.lexsort((cols, rows))

    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    return SparseSymMatrix(
        dim=n,
        indptr=_freeze(indptr),
        indices=_freeze(cols[order]),
        data=_freeze(vals[order]),
    )


def spmv(matrix: SparseSymMatrix, x) -> np.ndarray:
    """Sparse matrix-vector product touching only stored entries."""
    x = np.asarray(x, dtype=np.float64)
    return matrix.matvec(x)
