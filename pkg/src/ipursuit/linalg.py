"""Dense linear-algebra substrate: SVD with a fixed sign convention, rank
selection rules, dominant/least-dominant singular directions, orthogonal
projections, and a projector-based subspace distance.

Everything here is a pure function of its inputs and safe to call
concurrently.
"""

import numpy as np

__all__ = [
    "RankRule",
    "svd",
    "rank_from_singular_values",
    "dominant_basis",
    "least_dominant_direction",
    "orth",
    "project_off",
    "subspace_distance",
    "spectral_norm",
]


class RankRule:
    """Rule for choosing how many leading singular directions to keep.

    Three modes, exactly one active:

    - explicit: keep exactly ``rank`` directions (use when the rank is known,
      e.g. generated data).
    - energy: keep the smallest k with sum_{i<=k} s_i^2 >= energy * sum s_i^2.
    - gap: keep k maximizing the ratio s_k / s_{k+1} (the largest multiplicative
      gap in the spectrum). Suited to data with a spectral knee, e.g. low-rank
      plus moderate noise, and adapts as the rank of a shrinking dataset drops.

    ``max_rank`` optionally caps the result in any mode. ``min_rank`` raises
    the result to at least that many directions. ``gap_floor`` restricts the
    gap-mode ratio search to boundaries at or above it: coherent data can
    show a strong early knee well under the true rank, and when a structural
    bound rules the early knee out, the search must skip it rather than be
    rounded up after the fact (the rounded-up basis would still miss the
    directions between the knee and the bound). The cap wins over both
    floors; all three clamp to the number of nonzero singular values.
    """

    def __init__(self, rank=None, energy=None, gap=False, max_rank=None,
                 min_rank=None, gap_floor=None):
        modes = (rank is not None) + (energy is not None) + bool(gap)
        if modes != 1:
            raise ValueError("exactly one of rank/energy/gap must be set")
        if rank is not None and rank < 1:
            raise ValueError("explicit rank must be >= 1")
        if energy is not None and not 0.0 < energy <= 1.0:
            raise ValueError("energy threshold must be in (0, 1]")
        if min_rank is not None and min_rank < 1:
            raise ValueError("min_rank must be >= 1")
        if gap_floor is not None and not gap:
            raise ValueError("gap_floor requires gap mode")
        if gap_floor is not None and gap_floor < 1:
            raise ValueError("gap_floor must be >= 1")
        self.rank = rank
        self.energy = energy
        self.gap = bool(gap)
        self.max_rank = max_rank
        self.min_rank = min_rank
        self.gap_floor = gap_floor

    def __repr__(self):
        if self.rank is not None:
            mode = "rank=%d" % self.rank
        elif self.energy is not None:
            mode = "energy=%g" % self.energy
        else:
            mode = "gap=True"
        if self.max_rank is not None:
            mode += ", max_rank=%d" % self.max_rank
        if self.min_rank is not None:
            mode += ", min_rank=%d" % self.min_rank
        if self.gap_floor is not None:
            mode += ", gap_floor=%d" % self.gap_floor
        return "RankRule(%s)" % mode

    def __eq__(self, other):
        if not isinstance(other, RankRule):
            return NotImplemented
        return ((self.rank, self.energy, self.gap, self.max_rank,
                 self.min_rank, self.gap_floor)
                == (other.rank, other.energy, other.gap, other.max_rank,
                    other.min_rank, other.gap_floor))


DEFAULT_RANK_RULE = RankRule(energy=0.95)

# Relative floor below which singular values count as numerically zero.
_SIGMA_FLOOR = 1e-12


def _check_matrix(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("expected a 2-D array, got shape %s" % (A.shape,))
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError("matrix must be non-empty")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains non-finite entries")
    return A


def svd(A):
    """Thin SVD with a deterministic sign convention.

    Each left singular vector is flipped so that its largest-magnitude entry
    is positive (the paired right vector is flipped with it), which makes the
    decomposition reproducible across runs.

    Returns
    -------
    U : ndarray, shape (m, k)
    s : ndarray, shape (k,), non-increasing
    Vt : ndarray, shape (k, n)
    """
    A = _check_matrix(A)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    for i in range(U.shape[1]):
        j = np.argmax(np.abs(U[:, i]))
        if U[j, i] < 0:
            U[:, i] = -U[:, i]
            Vt[i, :] = -Vt[i, :]
    return U, s, Vt


def rank_from_singular_values(s, rule):
    """Apply a RankRule to a non-increasing singular-value array."""
    s = np.asarray(s, dtype=float)
    n = s.size
    if n == 0:
        return 0
    zero_floor = _SIGMA_FLOOR * max(s[0], np.finfo(float).tiny)
    nz = int(np.sum(s > zero_floor))
    if rule.rank is not None:
        if rule.rank > n:
            raise ValueError("requested rank %d exceeds min(rows, cols) = %d"
                             % (rule.rank, n))
        k = rule.rank
    elif rule.energy is not None:
        total = float(np.sum(s ** 2))
        if total <= 0.0:
            k = 1
        else:
            frac = np.cumsum(s ** 2) / total
            k = int(np.searchsorted(frac, rule.energy - 1e-15)) + 1
    else:
        # Gap mode: ignore the numerically-zero tail, then take the largest
        # successive ratio among the remaining values.
        if nz <= 1:
            k = max(nz, 1)
        else:
            window = nz if nz < n else n - 1
            if window == 0:
                k = n
            else:
                head = s[:window]
                tail = s[1:window + 1]
                ratios = head / np.maximum(tail, np.finfo(float).tiny)
                lo = 1
                if rule.gap_floor is not None:
                    lo = min(rule.gap_floor, window)
                k = lo + int(np.argmax(ratios[lo - 1:]))
    if rule.min_rank is not None:
        # Raise to the structural floor, but never past the numerically
        # nonzero part of the spectrum.
        k = max(k, min(rule.min_rank, max(nz, 1)))
    if rule.max_rank is not None:
        k = min(k, rule.max_rank)
    return max(k, 1)


def dominant_basis(A, rule=DEFAULT_RANK_RULE):
    """Orthonormal basis of the leading left singular directions of A."""
    U, s, _ = svd(A)
    k = rank_from_singular_values(s, rule)
    return U[:, :k]


def least_dominant_direction(A, r):
    """The r-th left singular vector of A (unit norm).

    This is the least dominant direction inside the span of the data, not a
    vector from the numerical null space; r should be the (estimated) rank.
    """
    A = _check_matrix(A)
    if not 1 <= r <= min(A.shape):
        raise ValueError("r=%d out of range for shape %s" % (r, A.shape))
    U, _, _ = svd(A)
    return U[:, r - 1]


def orth(A, rcond=None):
    """Orthonormal basis of the column space of A (numerical rank by SVD).

    ``rcond`` is the relative singular-value cutoff; defaults to
    max(m, n) * eps, matching the usual numerical-rank convention.
    """
    A = _check_matrix(A)
    U, s, _ = svd(A)
    if s.size == 0 or s[0] == 0.0:
        return U[:, :0]
    if rcond is None:
        rcond = max(A.shape) * np.finfo(float).eps
    k = int(np.sum(s > rcond * s[0]))
    return U[:, :k]


def project_off(B, X):
    """Project the columns of X onto the orthogonal complement of span(B).

    Computes (I - B B^T) X without forming the projector. B may have zero
    columns, in which case X is returned unchanged (as a copy).
    """
    B = np.asarray(B, dtype=float)
    X = np.asarray(X, dtype=float)
    squeeze = X.ndim == 1
    if squeeze:
        X = X[:, None]
    if B.ndim == 1:
        B = B[:, None]
    if B.shape[0] != X.shape[0]:
        raise ValueError("ambient dimensions differ: %d vs %d"
                         % (B.shape[0], X.shape[0]))
    out = X - B @ (B.T @ X)
    return out[:, 0] if squeeze else out


def subspace_distance(V1, V2):
    """Distance in [0, 1] between two subspaces given orthonormal bases.

    Defined as 1 - ||V1^T V2||_F^2 / min(dim1, dim2): 0 when one subspace
    contains the other, 1 when they are orthogonal.
    """
    V1 = np.asarray(V1, dtype=float)
    V2 = np.asarray(V2, dtype=float)
    if V1.ndim == 1:
        V1 = V1[:, None]
    if V2.ndim == 1:
        V2 = V2[:, None]
    if V1.shape[0] != V2.shape[0]:
        raise ValueError("ambient dimensions differ: %d vs %d"
                         % (V1.shape[0], V2.shape[0]))
    dmin = min(V1.shape[1], V2.shape[1])
    if dmin == 0:
        return 1.0
    overlap = np.linalg.norm(V1.T @ V2, "fro") ** 2 / dmin
    return float(np.clip(1.0 - overlap, 0.0, 1.0))


def spectral_norm(A):
    """Largest singular value of A."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))
