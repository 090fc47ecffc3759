"""Clustering metrics.

Clustering error is the fraction of misclassified points under the best
one-to-one matching of predicted to true labels, found exactly with the
assignment algorithm on the label confusion matrix. Subspace recovery is
judged by the summed residual of the estimated bases against the true ones
after the analogous optimal pairing.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .linalg import project_off, subspace_distance

__all__ = [
    "EvalReport",
    "assignment_solve",
    "clustering_error",
    "subspace_success",
]


@dataclass
class EvalReport:
    """Result of comparing predicted labels against the truth.

    clustering_error    misclassified fraction under the best matching.
    matched_permutation dict predicted label -> true label (-1 when the
                        predicted cluster matched no true cluster).
    confusion           count matrix, rows = true labels, cols = predicted.
    per_cluster_sizes   true-cluster sizes (row sums of confusion).
    success             optional subspace-recovery flag, filled by callers
                        that also compare bases.
    """

    clustering_error: float
    matched_permutation: dict
    confusion: np.ndarray
    per_cluster_sizes: np.ndarray
    success: object = None

    def as_dict(self):
        return {
            "clustering_error": self.clustering_error,
            "matched_permutation":
                {str(k): v for k, v in self.matched_permutation.items()},
            "confusion": self.confusion.tolist(),
            "per_cluster_sizes": self.per_cluster_sizes.tolist(),
            "success": self.success,
        }


def assignment_solve(cost):
    """Minimum-cost assignment of rows to columns.

    Returns an array giving the column assigned to each row; requires
    rows <= cols and finite costs.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError("cost must be a matrix")
    if cost.shape[0] > cost.shape[1]:
        raise ValueError("need rows <= cols for a full assignment of rows")
    if not np.all(np.isfinite(cost)):
        raise ValueError("costs must be finite")
    rows, cols = linear_sum_assignment(cost)
    out = np.empty(cost.shape[0], dtype=int)
    out[rows] = cols
    return out


def clustering_error(pred, truth):
    """Misclassified fraction under the best label matching.

    Labels may use different cluster counts; the confusion matrix is padded
    square with zero-overlap dummies, so a predicted cluster matched to no
    true cluster counts all its points as errors.
    """
    pred = np.asarray(pred, dtype=int).ravel()
    truth = np.asarray(truth, dtype=int).ravel()
    if pred.shape != truth.shape:
        raise ValueError("pred has %d labels, truth has %d"
                         % (pred.size, truth.size))
    if pred.size == 0:
        raise ValueError("no labels to compare")

    true_ids = np.unique(truth)
    pred_ids = np.unique(pred)
    confusion = np.zeros((true_ids.size, pred_ids.size), dtype=int)
    t_index = np.searchsorted(true_ids, truth)
    p_index = np.searchsorted(pred_ids, pred)
    np.add.at(confusion, (t_index, p_index), 1)

    side = max(true_ids.size, pred_ids.size)
    padded = np.zeros((side, side), dtype=int)
    padded[:true_ids.size, :pred_ids.size] = confusion
    cols = assignment_solve(-padded.astype(float))

    matched = int(sum(padded[i, cols[i]] for i in range(side)))
    ce = 1.0 - matched / pred.size

    mapping = {}
    for i in range(side):
        j = cols[i]
        if j < pred_ids.size and i < true_ids.size:
            mapping[int(pred_ids[j])] = int(true_ids[i])
    for pid in pred_ids:
        mapping.setdefault(int(pid), -1)

    return EvalReport(
        clustering_error=float(ce),
        matched_permutation=mapping,
        confusion=confusion,
        per_cluster_sizes=confusion.sum(axis=1))


def subspace_success(true_bases, est_bases, tol=1e-3):
    """Whether the estimated subspaces recover the true ones.

    Pairs estimated to true bases by optimal assignment on subspace distance
    and succeeds iff the total residual sum_i ||(I - V_i V_i^T) Vhat_i||_F
    over matched pairs is at most tol. A count mismatch is a failure, not an
    error.
    """
    if len(true_bases) != len(est_bases):
        return False
    if len(true_bases) == 0:
        return True
    dist = np.array([[subspace_distance(v, w) for w in est_bases]
                     for v in true_bases])
    cols = assignment_solve(dist)
    total = 0.0
    for i, j in enumerate(cols):
        resid = project_off(true_bases[i], np.asarray(est_bases[j], dtype=float))
        total += np.linalg.norm(resid)
    return bool(total <= tol)
