"""Exact k-nearest-neighbour search and symmetric graph construction.

A kd-tree provides the fast path; rows with tied distances are recomputed
exhaustively so that ordering is always (distance, lower index) and therefore
platform- and thread-count-independent.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .types import KnnGraph, ParameterError, PointCloud


def _exact_row(points, query, count, exclude=-1):
    d2 = np.sum((points - query) ** 2, axis=1)
    if exclude >= 0:
        d2[exclude] = np.inf
    order = np.lexsort((np.arange(points.shape[0]), d2))
    return order[:count]


def nearest_neighbors(points: np.ndarray, queries: np.ndarray, k: int,
                      exclude_identity: bool = False) -> np.ndarray:
    """Indices of the k nearest ``points`` per query row, ties by lower index.

    With ``exclude_identity`` the query at row i is assumed to be point i of
    ``points`` and is excluded from its own result.
    """
    n = points.shape[0]
    needed = k + 1 if exclude_identity else k
    if needed > n:
        raise ParameterError(f"requested {k} neighbours from {n} points")
    tree = cKDTree(points)
    # one spare column to detect ties straddling the cut-off
    kq = min(needed + 1, n)
    dist, idx = tree.query(queries, k=kq)
    dist = np.atleast_2d(dist)
    idx = np.atleast_2d(idx)

    tied = np.any(dist[:, 1:] == dist[:, :-1], axis=1)
    if exclude_identity:
        self_col = idx == np.arange(n)[:, None]
        # self must sit somewhere in the row; otherwise coincident points hid it
        tied |= ~np.any(self_col, axis=1)

    out = np.empty((queries.shape[0], k), dtype=np.int64)
    if exclude_identity:
        for i in range(queries.shape[0]):
            if tied[i]:
                continue
            row = idx[i]
            out[i] = row[row != i][:k]
    else:
        out[~tied] = idx[~tied, :k]

    for i in np.flatnonzero(tied):
        out[i] = _exact_row(points, queries[i], k, exclude=i if exclude_identity else -1)
    return out


def knn_query(cloud: PointCloud, queries: PointCloud, l: int) -> np.ndarray:
    """Per query point, the indices of its l nearest cloud points."""
    if l > len(cloud):
        raise ParameterError(f"l={l} exceeds cloud size {len(cloud)}")
    return nearest_neighbors(cloud.points, queries.points, l)


def build_knn_graph(cloud: PointCloud, k: int) -> KnnGraph:
    """Symmetric kNN graph; an edge exists if either endpoint selects the other."""
    n = len(cloud)
    if k >= n:
        raise ParameterError(f"k={k} must be smaller than cloud size {n}")
    nbrs = nearest_neighbors(cloud.points, cloud.points, k, exclude_identity=True)
    src = np.repeat(np.arange(n, dtype=np.int64), k)
    edges = np.stack([src, nbrs.ravel()], axis=1)
    return KnnGraph(k=k, n_nodes=n, edges=edges)
