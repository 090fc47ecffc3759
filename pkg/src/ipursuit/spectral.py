"""Direction search feeding spectral clustering.

The iterative pipeline needs each cluster to carry innovation relative to
the others' span. When the clusters jointly fill the ambient space that
fails, but the per-point searched directions still point away from all
clusters except the one containing the constraint point, so their response
profiles make a good similarity: solve the search once per data point (one
batched solve), keep each point's strongest responders as neighbors, and
run normalized spectral clustering on the symmetrized graph.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.linalg import eigh

from .pipeline import ClusterLabels
from .linalg import RankRule, dominant_basis
from .solver import SolverConfig, solve_ip_batch

__all__ = [
    "SpectralConfig",
    "direction_matrix",
    "build_similarity",
    "spectral_cluster",
    "dsc",
]

_NUMERICAL_ZERO = 1e-8


@dataclass(frozen=True)
class SpectralConfig:
    """Settings for the spectral path.

    num_clusters        target cluster count N (>= 2).
    neighbors_per_point edges kept per column; None derives
                        min(2 * dim_bound, 10), or 10 without a bound.
    kmeans_restarts     k-means++ restarts, best inertia wins.
    seed                drives k-means initialization only.
    dim_bound           optional cluster-dimension bound (neighbor default).
    solver              direction-search settings (None: defaults).
    rank_rule           span selection for the searches (None: largest gap).
    """

    num_clusters: int = 2
    neighbors_per_point: int = None
    kmeans_restarts: int = 20
    seed: int = 0
    dim_bound: int = None
    solver: SolverConfig = None
    rank_rule: RankRule = None

    def validate(self):
        if self.num_clusters < 2:
            raise ValueError("num_clusters must be >= 2")
        if self.neighbors_per_point is not None and self.neighbors_per_point < 1:
            raise ValueError("neighbors_per_point must be >= 1")
        if self.kmeans_restarts < 1:
            raise ValueError("kmeans_restarts must be >= 1")

    def resolved_knn(self):
        if self.neighbors_per_point is not None:
            return self.neighbors_per_point
        if self.dim_bound is not None:
            return min(2 * self.dim_bound, 10)
        return 10

    def resolved_rank_rule(self):
        return self.rank_rule if self.rank_rule is not None else RankRule(gap=True)


def direction_matrix(D_e, Q, cfg, return_failures=False):
    """Response profiles of the per-point direction searches.

    Column j holds |c_j*^T D_e| max-normalized, where c_j* solves the search
    constrained on the j-th data point, in the span of the dominant basis Q.
    All points are solved by one batched run. A column that stops at the
    iteration cap keeps its final iterate: an approximate direction still
    orders responders far better than raw coherence. Only columns whose
    point is orthogonal to the span (no direction can satisfy the
    constraint) fall back to the point's coherence profile |d_j^T D_e|.

    With return_failures=True also returns the array of columns that either
    fell back or stopped at the cap.
    """
    cfg.validate()
    D_e = np.asarray(D_e, dtype=float)
    Q = np.asarray(Q, dtype=float)
    F = Q.T @ D_e
    n = F.shape[1]
    scfg = cfg.solver if cfg.solver is not None else SolverConfig()

    ok = np.linalg.norm(F, axis=0) >= _NUMERICAL_ZERO
    R = np.empty((n, n))
    failed = np.flatnonzero(~ok).tolist()
    if ok.any():
        A, converged, _ = solve_ip_batch(F[:, ok], F[:, ok], scfg)
        R[:, ok] = np.abs(F.T @ A)
        failed.extend(np.flatnonzero(ok)[~converged].tolist())
    for j in np.flatnonzero(~ok):
        R[:, j] = np.abs(D_e[:, j] @ D_e)

    R /= np.maximum(R.max(axis=0, keepdims=True), np.finfo(float).tiny)
    if return_failures:
        return R, np.array(sorted(failed), dtype=int)
    return R


def build_similarity(R, k_nn):
    """Symmetric neighbor graph from a response matrix.

    Keeps the k_nn largest entries of every column (the column's own entry
    included), zeroes the rest, and symmetrizes: W = (A + A^T) / 2.
    """
    R = np.asarray(R, dtype=float)
    n = R.shape[1]
    if k_nn < 1:
        raise ValueError("k_nn must be >= 1")
    k = min(k_nn, R.shape[0])
    A = np.zeros_like(R)
    for j in range(n):
        idx = np.argpartition(-R[:, j], k - 1)[:k]
        A[idx, j] = R[idx, j]
    return (A + A.T) / 2.0


def spectral_cluster(W, cfg):
    """Normalized spectral clustering of a similarity matrix.

    Embeds the points in the row-normalized N smallest eigenvectors of
    L_sym = I - D^(-1/2) W D^(-1/2) and clusters the rows with k-means
    (k-means++ initialization, kmeans_restarts restarts, best inertia).
    Zero-degree nodes get a 1e-12 self-loop and a warning.
    """
    cfg.validate()
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    if W.shape != (n, n):
        raise ValueError("W must be square")
    if np.max(np.abs(W - W.T)) > 1e-12:
        raise ValueError("W must be symmetric")
    if W.min() < 0:
        raise ValueError("W must be non-negative")
    N = cfg.num_clusters

    W = W.copy()
    degrees = W.sum(axis=1)
    isolated = degrees <= 0
    if isolated.any():
        warnings.warn("%d zero-degree nodes; adding tiny self-loops"
                      % int(isolated.sum()))
        W[isolated, isolated] = 1e-12
        degrees = W.sum(axis=1)

    inv_sqrt = 1.0 / np.sqrt(degrees)
    L = np.eye(n) - inv_sqrt[:, None] * W * inv_sqrt[None, :]
    L = (L + L.T) / 2.0
    _, vecs = eigh(L, subset_by_index=[0, min(N, n) - 1])
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    embed = vecs / np.maximum(norms, np.finfo(float).tiny)

    rng = np.random.default_rng(cfg.seed)
    best_labels = None
    best_inertia = np.inf
    for _ in range(cfg.kmeans_restarts):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # empty k-means clusters are fine
            centers, labels = kmeans2(embed, N, minit="++", seed=rng)
        inertia = float(np.sum((embed - centers[labels]) ** 2))
        if inertia < best_inertia:
            best_inertia = inertia
            best_labels = labels
    return ClusterLabels(labels=best_labels.astype(int), num_clusters=N)


def dsc(D_e, cfg):
    """Full spectral path: responses, neighbor graph, spectral clustering."""
    D_e = np.asarray(D_e, dtype=float)
    Q = dominant_basis(D_e, cfg.resolved_rank_rule())
    R = direction_matrix(D_e, Q, cfg)
    W = build_similarity(R, cfg.resolved_knn())
    return spectral_cluster(W, cfg)
