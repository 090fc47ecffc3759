"""Executable identifiability theory.

Tools to measure, on concrete data, the quantities that govern whether the
direction search can separate one cluster from the rest: innovation
subspaces, the oracle direction restricted to them, the permeance statistic
(how well points fill their subspace), the coherency of a constraint vector
with the innovation subspace, and the two sufficient inequalities that
certify correct identification (for two clusters, for the m-th of many, and
the per-cluster simplified variant). A closed-form probabilistic bound
covers the uniform-on-the-sphere data model.

The infimum on the left-hand side of the certificates is not computable
exactly in high dimension. Reports therefore carry two values: a probe-based
estimate (an upper bound on the true infimum, optimistic) and a certified
lower bound sigma_min(V^T D) (pessimistic, from ||x||_1 >= ||x||_2). The
satisfied flags use the certified bound, so a True flag is trustworthy while
a False flag may be a false alarm.
"""

import math
from dataclasses import dataclass, asdict

import numpy as np

from .linalg import orth, project_off, spectral_norm, svd
from .solver import SolverConfig, solve_ip, OrthogonalConstraintError

__all__ = [
    "NoInnovationError",
    "TheoremReport",
    "Lemma2Report",
    "innovation_subspace",
    "solve_oracle",
    "permeance",
    "coherency",
    "check_theorem1",
    "check_theorem2",
    "check_theorem2_simplified",
    "lemma2_bound",
]

# Membership cutoff for the zero-response index set on unit-norm data.
_ZERO_RESPONSE = 1e-8


class NoInnovationError(ValueError):
    """The second subspace is contained in the first (nothing to pursue)."""


@dataclass
class TheoremReport:
    """Both sides of the two sufficient inequalities plus their ingredients.

    lhs1/lhs2 are computed from the certified permeance lower bound, so
    satisfied_i (= lhs_i > rhs_i) is conservative; permeance_estimate is the
    optimistic probe-based value of the same infimum. subspace_coherence is
    the spectral norm of V_m^T T (T spans the other clusters), and
    innovation_coherence that of V_m^T P (P spans the innovation subspace).
    t_index is the cluster whose innovation permeance defines the simplified
    left-hand side (None for the exact checks).
    """

    lhs1: float
    rhs1: float
    lhs2: float
    rhs2: float
    satisfied1: bool
    satisfied2: bool
    subspace_coherence: float
    innovation_coherence: float
    alpha_norm: float
    n_zero: int
    q_innovation_norm: float
    q_base_norm: float
    permeance_estimate: float
    permeance_certified: float
    t_index: object = None

    @property
    def satisfied(self):
        return self.satisfied1 and self.satisfied2

    def coherency(self):
        if self.q_base_norm <= 1e-12:
            return math.inf
        return self.q_innovation_norm / self.q_base_norm

    def as_dict(self):
        d = asdict(self)
        d["satisfied"] = self.satisfied
        d["coherency"] = self.coherency()
        return d


@dataclass
class Lemma2Report:
    """Closed-form sufficient conditions for uniform-on-the-sphere data."""

    lhs1: float
    rhs1: float
    lhs2: float
    rhs2: float
    satisfied1: bool
    satisfied2: bool
    prob_bound: float

    @property
    def satisfied(self):
        return self.satisfied1 and self.satisfied2

    def as_dict(self):
        d = asdict(self)
        d["satisfied"] = self.satisfied
        return d


def innovation_subspace(V1, V2):
    """Orthonormal basis of the complement of span(V1) inside the joint span.

    Spanned by (I - V1 V1^T) V2; orthogonal to span(V1) by construction, with
    dimension dim(S2) - dim(S1 and S2).
    """
    V2 = np.asarray(V2, dtype=float)
    if V2.ndim == 1:
        V2 = V2[:, None]
    proj = project_off(V1, V2)
    if np.max(np.abs(proj)) < 1e-12:
        raise NoInnovationError("second subspace is contained in the first")
    P = orth(proj)
    if P.shape[1] == 0:
        raise NoInnovationError("second subspace is contained in the first")
    return P


def solve_oracle(D2, P2, q, cfg=None):
    """Direction search restricted to an innovation subspace.

    Minimizes ||c^T D2||_1 over c in span(P2) with c^T q = 1, via solve_ip in
    the coordinates of P2. Returns (c2, L0) where L0 indexes the columns of
    D2 with zero response |c2^T d| <= 1e-8.
    """
    D2 = np.asarray(D2, dtype=float)
    P2 = np.asarray(P2, dtype=float)
    if P2.ndim == 1:
        P2 = P2[:, None]
    q = np.asarray(q, dtype=float).ravel()
    if P2.shape[1] == 1:
        # One-dimensional search space: the constraint pins the coefficient.
        denom = float(P2[:, 0] @ q)
        if abs(denom) < _ZERO_RESPONSE:
            raise OrthogonalConstraintError(
                "constraint vector is orthogonal to the innovation subspace")
        c2 = P2[:, 0] / denom
    else:
        res = solve_ip(P2.T @ D2, P2.T @ q, cfg)
        c2 = P2 @ res.coeffs
    L0 = np.flatnonzero(np.abs(c2 @ D2) <= _ZERO_RESPONSE)
    return c2, L0


def permeance(D, V, num_probes=64, seed=0, refine_iters=60):
    """Smallest summed absolute projection of the points on a unit direction.

    Estimates P(D, S) = inf over unit u in span(V) of sum_j |u^T d_j| by
    evaluating num_probes random unit directions and refining every probe
    with projected subgradient descent on the sphere; the estimate is the
    best value seen anywhere. Probes are drawn sequentially from the seeded
    generator and refined independently, so growing num_probes can only
    lower the estimate.

    Returns (estimate, certified_lower_bound). The certified bound is
    sigma_min(V^T D) (a one-norm dominates a two-norm); the estimate is the
    value of the objective at a feasible direction, so estimate >= bound
    always.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    A = V.T @ np.asarray(D, dtype=float)
    r, n = A.shape
    if n == 0 or r == 0:
        return 0.0, 0.0

    s = svd(A)[1]
    certified = float(s[-1]) if n >= r else 0.0

    rng = np.random.default_rng(seed)
    # (num_probes, r) keeps earlier probes unchanged when more are requested.
    X = rng.standard_normal((num_probes, r)).T
    X /= np.linalg.norm(X, axis=0)
    values = np.sum(np.abs(A.T @ X), axis=0)
    best = float(np.min(values))
    for k in range(1, refine_iters + 1):
        G = A @ np.sign(A.T @ X)
        norms = np.linalg.norm(G, axis=0)
        G /= np.maximum(norms, np.finfo(float).tiny)
        X = X - (0.3 / np.sqrt(k)) * G
        X /= np.maximum(np.linalg.norm(X, axis=0), np.finfo(float).tiny)
        values = np.sum(np.abs(A.T @ X), axis=0)
        best = min(best, float(np.min(values)))
    return max(best, certified), certified


def coherency(q, P2, V1):
    """||q^T P2|| / ||q^T V1||, how much q leans into the innovation subspace.

    Returns the +inf sentinel when the denominator is below 1e-12 (q has no
    component in the first subspace). Invariant to positive rescaling of q.
    """
    q = np.asarray(q, dtype=float).ravel()
    num = np.linalg.norm(q @ np.asarray(P2, dtype=float))
    den = np.linalg.norm(q @ np.asarray(V1, dtype=float))
    if den <= 1e-12:
        return math.inf
    return float(num / den)


def _check_core(datasets, bases, q, num_probes, seed, cfg,
                lhs_override=None, t_index=None):
    """Shared body of the exact certificates.

    The last entry of datasets/bases is the cluster being identified; the
    rest form the base side. lhs_override, when given, supplies the
    (estimate, certified) pair for the left-hand infimum in place of the
    joint permeance of the base side (used by the simplified variant).
    """
    if len(datasets) != len(bases) or len(datasets) < 2:
        raise ValueError("need matching datasets and bases for >= 2 clusters")
    q = np.asarray(q, dtype=float).ravel()
    Vm = np.asarray(bases[-1], dtype=float)
    Dm = np.asarray(datasets[-1], dtype=float)
    T = orth(np.hstack([np.asarray(b, dtype=float) for b in bases[:-1]]))
    P = innovation_subspace(T, Vm)

    q_innov = float(np.linalg.norm(q @ P))
    q_base = float(np.linalg.norm(q @ T))
    if q_innov < _ZERO_RESPONSE:
        # The oracle constraint cannot be met by any direction in the
        # innovation subspace; anchor it to the first innovation direction
        # instead so the right-hand sides stay finite. The second inequality
        # fails by construction (its left side is zero).
        c2, L0 = solve_oracle(Dm, P, P[:, 0], cfg)
    else:
        c2, L0 = solve_oracle(Dm, P, q, cfg)
    n0 = int(L0.size)
    alpha = Dm @ np.sign(c2 @ Dm)
    alpha_norm = float(np.linalg.norm(alpha))

    if lhs_override is None:
        base_data = np.hstack([np.asarray(d, dtype=float) for d in datasets[:-1]])
        estimate, certified = permeance(base_data, T, num_probes, seed)
    else:
        estimate, certified = lhs_override

    sub_coh = spectral_norm(Vm.T @ T)
    innov_coh = spectral_norm(Vm.T @ P)
    rhs_common = alpha_norm + n0
    lhs1 = 0.5 * certified
    rhs1 = sub_coh * rhs_common
    if q_base <= 1e-12:
        lhs2 = math.inf if q_innov * certified > 0 else 0.0
    else:
        lhs2 = (q_innov / (2.0 * q_base)) * certified
    rhs2 = innov_coh * rhs_common

    return TheoremReport(
        lhs1=lhs1, rhs1=rhs1, lhs2=lhs2, rhs2=rhs2,
        satisfied1=bool(lhs1 > rhs1), satisfied2=bool(lhs2 > rhs2),
        subspace_coherence=sub_coh, innovation_coherence=innov_coh,
        alpha_norm=alpha_norm, n_zero=n0,
        q_innovation_norm=q_innov, q_base_norm=q_base,
        permeance_estimate=estimate, permeance_certified=certified,
        t_index=t_index)


def check_theorem1(D1, D2, V1, V2, q, num_probes=64, seed=0, cfg=None):
    """Certificate that the direction search separates cluster 2 from 1.

    Evaluates, with c2 the oracle direction and alpha/n_zero derived from it:

        (1/2) inf_{u in S1, |u|=1} sum_{D1} |u^T d|  >  |V1^T V2| (|alpha| + n0)
        (|q^T P2| / 2|q^T V1|) (same inf)            >  |V2^T P2| (|alpha| + n0)

    When both hold the oracle direction is optimal for the unrestricted
    search and the identified cluster is exactly cluster 2.
    """
    return _check_core([D1, D2], [V1, V2], q, num_probes, seed, cfg)


def check_theorem2(datasets, bases, q, num_probes=64, seed=0, cfg=None):
    """Certificate for identifying the last of m clusters.

    Same structure as check_theorem1 with the first m-1 clusters pooled: T
    spans their sum, the permeance runs over their united points, and the
    innovation subspace is taken relative to T. With m = 2 this reduces to
    check_theorem1 exactly.
    """
    return _check_core(list(datasets), list(bases), q, num_probes, seed, cfg)


def check_theorem2_simplified(datasets, bases, q, num_probes=64, seed=0,
                              cfg=None):
    """Per-cluster form of the certificate's left-hand side.

    Replaces the joint infimum over the pooled base clusters with the
    permeance of a single cluster t projected onto its own innovation
    subspace I_t (relative to the sum of all other clusters, the last one
    included); t is the argmin of the per-cluster values. Conjectured equal
    to the joint infimum for well-distributed data; here each side is
    measured, not assumed. A base cluster with no innovation of its own
    contributes zero, so it is selected and the conditions fail.
    """
    datasets = [np.asarray(d, dtype=float) for d in datasets]
    bases = [np.asarray(b, dtype=float) for b in bases]
    m = len(bases)
    if m < 2:
        raise ValueError("need >= 2 clusters")

    best = None  # (estimate, certified, index)
    for j in range(m - 1):
        others = orth(np.hstack([bases[k] for k in range(m) if k != j]))
        try:
            Ij = innovation_subspace(others, bases[j])
        except NoInnovationError:
            best = (0.0, 0.0, j)
            break
        proj = Ij @ (Ij.T @ datasets[j])
        est, cert = permeance(proj, Ij, num_probes, seed)
        if best is None or est < best[0]:
            best = (est, cert, j)

    return _check_core(datasets, bases, q, num_probes, seed, cfg,
                       lhs_override=best[:2], t_index=best[2])


def lemma2_bound(n1, r1, n2, n0, coh, innov_coh, cr, t1, t2, r2):
    """Closed-form conditions for points uniform on the sphere of each
    subspace, plus the probability with which they certify success.

    Evaluates, with L = sqrt(2/pi) n1/r1 - 2 sqrt(n1) - t1 sqrt(n1/(r1-1)):

        L    > 2 coh (t2 sqrt(n2 - n0) + n0)
        cr L > 2 innov_coh (t2 sqrt(n2 - n0) + n0)

    and prob_bound = 1 - exp(-(r2/2)(t2^2 - log t2^2 - 1)) - exp(-t1^2 / 2),
    clamped to [0, 1]. Requires t2 > 1, t1 >= 0, r1 >= 2 (the printed L is
    undefined for one-dimensional subspaces). Arithmetic only; no sampling.
    """
    if not t2 > 1:
        raise ValueError("t2 must be > 1")
    if t1 < 0:
        raise ValueError("t1 must be >= 0")
    if r1 < 2:
        raise ValueError("r1 must be >= 2")
    if not 0 <= n0 <= n2:
        raise ValueError("n0 must lie in [0, n2]")

    L = (math.sqrt(2.0 / math.pi) * n1 / r1 - 2.0 * math.sqrt(n1)
         - t1 * math.sqrt(n1 / (r1 - 1.0)))
    rhs_common = t2 * math.sqrt(n2 - n0) + n0
    lhs1 = L
    rhs1 = 2.0 * coh * rhs_common
    lhs2 = cr * L
    rhs2 = 2.0 * innov_coh * rhs_common
    prob = (1.0 - math.exp(-(r2 / 2.0) * (t2 ** 2 - math.log(t2 ** 2) - 1.0))
            - math.exp(-t1 ** 2 / 2.0))
    prob = min(max(prob, 0.0), 1.0)
    return Lemma2Report(
        lhs1=lhs1, rhs1=rhs1, lhs2=lhs2, rhs2=rhs2,
        satisfied1=bool(lhs1 > rhs1), satisfied2=bool(lhs2 > rhs2),
        prob_bound=prob)
