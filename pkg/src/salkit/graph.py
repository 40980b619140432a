"""Superpixel-level graph: RBF affinities, kernel Gram matrix, Laplacian.

The affinity matrix W holds RBF similarities only between spatially adjacent
regions (zero elsewhere, zero diagonal), while the Gram matrix K holds the
RBF kernel over every pair. L is the unnormalized Laplacian D - W. With a
couple hundred regions everything stays dense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SuperpixelGraph:
    """Immutable bundle of W, K, L (all n x n), the kernel scale, and the
    node features the kernel was evaluated on."""

    W: np.ndarray
    K: np.ndarray
    L: np.ndarray
    rho: float
    features: np.ndarray

    def __post_init__(self):
        n = self.W.shape[0]
        if self.W.shape != (n, n) or self.K.shape != (n, n) or self.L.shape != (n, n):
            raise ValueError("W, K, L must be square matrices of equal size")
        if self.features.shape[0] != n:
            raise ValueError("features must have one row per node")
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not np.allclose(self.W, self.W.T):
            raise ValueError("W must be symmetric")
        if np.any(np.diag(self.W) != 0.0):
            raise ValueError("W must have a zero diagonal")
        if self.W.min() < 0.0 or self.W.max() > 1.0:
            raise ValueError("W entries must lie in [0, 1]")
        if not np.allclose(np.diag(self.K), 1.0):
            raise ValueError("K must have a unit diagonal")
        if np.abs(self.L.sum(axis=1)).max() > 1e-10:
            raise ValueError("L rows must sum to zero")
        for name in ("W", "K", "L", "features"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self):
        return self.W.shape[0]


def rbf_kernel(xi, xj, rho):
    """exp(-||xi - xj||^2 / rho) for a single feature pair."""
    xi = np.asarray(xi, dtype=np.float64)
    xj = np.asarray(xj, dtype=np.float64)
    if xi.shape != xj.shape:
        raise ValueError("feature vectors must have equal dimension")
    if not (np.all(np.isfinite(xi)) and np.all(np.isfinite(xj))):
        raise ValueError("feature vectors must be finite")
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    return float(np.exp(-np.sum((xi - xj) ** 2) / rho))


def build_adjacency(labels):
    """Unordered region pairs (i, j), i < j, that share a 4-neighbor edge."""
    labels = np.asarray(labels)
    pairs = set()
    for a, b in ((labels[:, :-1], labels[:, 1:]), (labels[:-1, :], labels[1:, :])):
        diff = a != b
        lo = np.minimum(a[diff], b[diff])
        hi = np.maximum(a[diff], b[diff])
        pairs.update(zip(lo.tolist(), hi.tolist()))
    return pairs


def gram_matrix(features, rho):
    """Full RBF Gram matrix over all feature pairs."""
    features = np.asarray(features, dtype=np.float64)
    sq = ((features[:, None, :] - features[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-sq / rho)


def build_graph(features, adjacency, rho):
    """Assemble the SuperpixelGraph from node features and adjacency pairs."""
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    K = gram_matrix(features, rho)
    W = np.zeros((n, n))
    for i, j in adjacency:
        W[i, j] = W[j, i] = K[i, j]
    L = np.diag(W.sum(axis=1)) - W
    return SuperpixelGraph(W=W, K=K, L=L, rho=float(rho), features=features)


def graph_for_segmentation(seg, rho):
    """Convenience: adjacency from the label map, then the full graph."""
    return build_graph(seg.features, build_adjacency(seg.labels), rho)


def dump_graph_csv(graph, stem):
    """Write W, K, L as ``<stem>_W.csv`` etc. for debugging."""
    paths = []
    for name in ("W", "K", "L"):
        path = f"{stem}_{name}.csv"
        np.savetxt(path, getattr(graph, name), delimiter=",", fmt="%.17g")
        paths.append(path)
    return paths
