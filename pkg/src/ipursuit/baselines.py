"""K-flats baseline.

Alternates between assigning every point to the flat with the smallest
residual and refitting each flat from the leading singular vectors of its
assigned points. Sensitive to initialization, so the best of several
random restarts (by total squared residual) is returned.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import svd
from .pipeline import ClusterLabels

__all__ = ["KFlatsConfig", "kflats"]


@dataclass(frozen=True)
class KFlatsConfig:
    """num_subspaces flats of the given dimensions (int broadcasts)."""

    num_subspaces: int = 2
    subspace_dims: object = 1
    max_iters: int = 100
    restarts: int = 10
    seed: int = 0

    def validate(self):
        if self.num_subspaces < 1:
            raise ValueError("num_subspaces must be >= 1")
        for d in self.dims():
            if d < 1:
                raise ValueError("subspace dims must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")

    def dims(self):
        if np.isscalar(self.subspace_dims):
            return [int(self.subspace_dims)] * self.num_subspaces
        dims = [int(d) for d in self.subspace_dims]
        if len(dims) != self.num_subspaces:
            raise ValueError("need one dimension per flat")
        return dims


def _refit(D, labels, dims, old_bases):
    """Top-r_k left singular vectors per cluster; an empty cluster is
    reseeded from the point worst fit by its current flat."""
    bases = []
    for k, r_k in enumerate(dims):
        cols = D[:, labels == k]
        if cols.shape[1] == 0:
            resid = np.linalg.norm(D, axis=0) ** 2
            for j, basis in enumerate(old_bases):
                mask = labels == j
                if mask.any() and basis is not None:
                    resid[mask] -= np.sum((basis.T @ D[:, mask]) ** 2, axis=0)
            worst = int(np.argmax(resid))
            point = D[:, worst]
            norm = np.linalg.norm(point)
            bases.append((point / norm if norm > 0 else point)[:, None])
            continue
        U, _, _ = svd(cols)
        bases.append(U[:, :min(r_k, U.shape[1])])
    return bases


def _assign(D, bases):
    proj = np.stack([np.sum((b.T @ D) ** 2, axis=0) for b in bases])
    labels = np.argmax(proj, axis=0)
    total = float(np.sum(np.linalg.norm(D, axis=0) ** 2)
                  - np.sum(proj[labels, np.arange(D.shape[1])]))
    return labels, total


def kflats(D, cfg):
    """Best-of-restarts alternating flats fit.

    Each restart starts from a uniformly random assignment, alternates
    refit/assign until the labels reach a fixed point or max_iters, and is
    scored by the total squared residual; the best restart's labels win.
    """
    cfg.validate()
    D = np.asarray(D, dtype=float)
    n = D.shape[1]
    dims = cfg.dims()
    if cfg.num_subspaces * min(dims) > n:
        raise ValueError("not enough columns for the requested flats")

    best_labels = None
    best_total = np.inf
    for child in np.random.SeedSequence(cfg.seed).spawn(cfg.restarts):
        rng = np.random.default_rng(child)
        labels = rng.integers(cfg.num_subspaces, size=n)
        bases = [None] * cfg.num_subspaces
        for _ in range(cfg.max_iters):
            bases = _refit(D, labels, dims, bases)
            new_labels, total = _assign(D, bases)
            if np.array_equal(new_labels, labels):
                labels = new_labels
                break
            labels = new_labels
        if total < best_total:
            best_total = total
            best_labels = labels
    return ClusterLabels(labels=best_labels.astype(int),
                         num_clusters=cfg.num_subspaces)
