"""Direction-search solvers.

The basic program finds a direction in the span of the data that has unit
projection on a constraint vector and minimal summed absolute projection on
all data points:

    min_a ||a^T F||_1   s.t.   a^T f = 1,

where F = U^T D collects the data expressed in an orthonormal basis U of the
search span and f = U^T q. Its minimizer is a direction of innovation: it is
(nearly) orthogonal to every point of all clusters except the one the
constraint vector leans into.

Solved by ADMM with the split t = F^T a. The quadratic subproblem's normal
matrix mu * (F F^T + f f^T) is factored once per solve, so each iteration
costs O(r * M2).

A sparse-representation variant additionally asks the direction to be a
sparse combination of the data points (a = F z):

    min_{a,z} ||a^T F||_1 + gamma ||z||_1   s.t.   a = F z, a^T f = 1,

which guards against directions that hide in the noise tail of the spectrum.
A small LP oracle (scipy linprog) solves the identical problems exactly on
test-scale instances, and a batched solver runs one ADMM for many constraint
vectors at once (used by the spectral path).
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .linalg import spectral_norm

__all__ = [
    "SolverConfig",
    "DirectionResult",
    "SolverError",
    "OrthogonalConstraintError",
    "DegenerateDirectionError",
    "soft_threshold",
    "default_gamma",
    "solve_ip",
    "solve_ip_sparse",
    "solve_ip_batch",
    "lp_oracle",
]

# Constraint vectors with smaller norm than this count as orthogonal to the
# search span; responses smaller than this times ||F|| count as zero.
_NUMERICAL_ZERO = 1e-8


class SolverError(Exception):
    """Base class for direction-search failures."""


class OrthogonalConstraintError(SolverError):
    """The constraint vector is (numerically) orthogonal to the search span."""


class DegenerateDirectionError(SolverError):
    """The optimal direction is orthogonal to essentially every data point.

    This happens when the search span includes noise directions; restrict the
    span to a dominant basis of the data (or lower its rank) and solve again.
    """


@dataclass(frozen=True)
class SolverConfig:
    """ADMM solver settings.

    mu          penalty parameter; None picks 10 / ||F||_2.
    gamma       sparse-representation weight; None picks
                0.1 * mean column l1 norm of F / sqrt(M2). Only the sparse
                variant reads it.
    max_iters   iteration cap.
    tol         stopping tolerance on the primal residuals; the split
                residual is measured relative to max(1, ||t||), the scalar
                constraint residual absolutely.
    seed        reserved; solves are deterministic.
    track_history  record the augmented Lagrangian value per iteration.
    """

    mu: float = None
    gamma: float = None
    max_iters: int = 2000
    tol: float = 1e-6
    seed: int = 0
    track_history: bool = False

    def validate(self):
        if self.mu is not None and not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.gamma is not None and self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class DirectionResult:
    """Outcome of one direction search.

    direction       the direction in ambient coordinates (basis @ coeffs when
                    a basis is supplied, else equal to coeffs).
    coeffs          a*, coordinates in the search span.
    sparse_coeffs   z* over data points (sparse variant only, else None).
    responses       |a*^T F| scaled so the largest entry is exactly 1.
    cost            objective value at the solution.
    iterations      ADMM iterations performed.
    converged       primal residuals met tol within max_iters.
    final_residuals tuple of primal residuals at exit.
    history         per-iteration augmented-Lagrangian values, if tracked.
    """

    direction: np.ndarray
    coeffs: np.ndarray
    sparse_coeffs: object
    responses: np.ndarray
    cost: float
    iterations: int
    converged: bool
    final_residuals: tuple
    history: object = None


def soft_threshold(x, eps):
    """Element-wise shrinkage sgn(x) * max(|x| - eps, 0)."""
    if eps < 0:
        raise ValueError("threshold must be >= 0")
    return np.sign(x) * np.maximum(np.abs(x) - eps, 0.0)


def default_gamma(F):
    """Documented default sparse-representation weight for a given F."""
    F = np.asarray(F, dtype=float)
    m2 = F.shape[1]
    return 0.1 * float(np.mean(np.sum(np.abs(F), axis=0))) / np.sqrt(m2)


def _check_inputs(F, f):
    F = np.asarray(F, dtype=float)
    f = np.asarray(f, dtype=float).ravel()
    if F.ndim != 2:
        raise ValueError("F must be 2-D")
    if f.shape[0] != F.shape[0]:
        raise ValueError("f has length %d, F has %d rows" % (f.shape[0], F.shape[0]))
    if np.linalg.norm(f) < _NUMERICAL_ZERO:
        raise OrthogonalConstraintError(
            "constraint vector is orthogonal to the search span")
    return F, f


def _cho(K):
    # Tiny ridge fallback for rank-deficient F (degenerate but user-reachable).
    try:
        return cho_factor(K)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * max(np.trace(K) / K.shape[0], 1.0)
        return cho_factor(K + jitter * np.eye(K.shape[0]))


def _finish(Fa, a, z, basis, cost, iters, converged, residuals, history, norm_F):
    hmax = float(np.max(np.abs(Fa))) if Fa.size else 0.0
    if hmax < _NUMERICAL_ZERO * max(norm_F, np.finfo(float).tiny):
        raise DegenerateDirectionError(
            "every response is numerically zero; restrict the search span to "
            "a dominant basis of the data and solve again")
    responses = np.abs(Fa) / hmax
    direction = a.copy() if basis is None else np.asarray(basis, dtype=float) @ a
    return DirectionResult(
        direction=direction, coeffs=a.copy(), sparse_coeffs=z,
        responses=responses, cost=float(cost), iterations=iters,
        converged=converged, final_residuals=residuals,
        history=None if history is None else np.asarray(history))


def solve_ip(F, f, cfg=None, basis=None):
    """Minimize ||a^T F||_1 subject to a^T f = 1 by ADMM.

    Parameters
    ----------
    F : (r, M2) array, data in the search-span coordinates (U^T D).
    f : (r,) array, constraint vector in the same coordinates (U^T q).
    cfg : SolverConfig, optional.
    basis : (M1, r) array, optional; when given, the returned direction is
        basis @ a* in ambient coordinates.

    Raises OrthogonalConstraintError when ||f|| is numerically zero and
    DegenerateDirectionError when the solution is orthogonal to all columns.
    """
    cfg = cfg or SolverConfig()
    cfg.validate()
    F, f = _check_inputs(F, f)
    m2 = F.shape[1]

    norm_F = spectral_norm(F)
    mu = cfg.mu if cfg.mu is not None else 10.0 / max(norm_F, np.finfo(float).tiny)
    chol = _cho(mu * (F @ F.T + np.outer(f, f)))

    a = f / (f @ f)  # feasible start: a^T f = 1
    t = F.T @ a
    y1 = np.zeros(m2)
    y2 = 0.0
    history = [] if cfg.track_history else None

    Fa = t
    converged = False
    iters = 0
    r_split = r_unit = np.inf
    for iters in range(1, cfg.max_iters + 1):
        rhs = mu * (F @ t) - F @ y1 + f * (mu - y2)
        a = cho_solve(chol, rhs)
        Fa = F.T @ a
        t = soft_threshold(Fa + y1 / mu, 1.0 / mu)
        split = Fa - t
        unit = float(a @ f) - 1.0
        y1 += mu * split
        y2 += mu * unit
        if history is not None:
            lag = (np.sum(np.abs(t)) + y1 @ split + y2 * unit
                   + 0.5 * mu * (split @ split + unit * unit))
            history.append(lag)
        r_split = np.linalg.norm(split)
        r_unit = abs(unit)
        if r_split <= cfg.tol * max(1.0, np.linalg.norm(t)) and r_unit <= cfg.tol:
            converged = True
            break

    return _finish(Fa, a, None, basis, np.sum(np.abs(Fa)), iters, converged,
                   (r_split, r_unit), history, norm_F)


def solve_ip_sparse(F, f, cfg=None, basis=None):
    """Sparse-representation direction search.

    Minimizes ||a^T F||_1 + gamma ||z||_1 subject to a = F z and a^T f = 1.
    Eliminating a gives a problem in z alone with H = F^T F and g = F^T f:

        min ||H z||_1 + gamma ||z||_1   s.t.   g^T z = 1,

    solved by ADMM with splits t = H z and s = z (each iteration costs
    O(M2^2)). With gamma = 0 the problem is exactly solve_ip through the
    substitution, so this delegates to solve_ip and reports the minimum-norm
    representation z of the solution.
    """
    cfg = cfg or SolverConfig()
    cfg.validate()
    F, f = _check_inputs(F, f)
    m2 = F.shape[1]
    gamma = cfg.gamma if cfg.gamma is not None else default_gamma(F)

    if gamma == 0.0:
        res = solve_ip(F, f, cfg, basis=basis)
        z = np.linalg.lstsq(F, res.coeffs, rcond=None)[0]
        res.sparse_coeffs = z
        return res

    H = F.T @ F
    g = F.T @ f
    if np.linalg.norm(g) < _NUMERICAL_ZERO:
        raise OrthogonalConstraintError(
            "constraint vector is orthogonal to the span of the data columns")

    norm_F = spectral_norm(F)
    norm_H = norm_F ** 2
    mu = cfg.mu if cfg.mu is not None else 10.0 / max(norm_H, np.finfo(float).tiny)
    chol = _cho(H @ H + np.outer(g, g) + np.eye(m2))

    z = g / (g @ g)
    Hz = H @ z
    t = Hz
    s = z
    y1 = np.zeros(m2)
    y2 = 0.0
    y3 = np.zeros(m2)
    history = [] if cfg.track_history else None

    converged = False
    iters = 0
    r_split = r_unit = r_rep = np.inf
    for iters in range(1, cfg.max_iters + 1):
        rhs = H @ (t - y1 / mu) + g * (1.0 - y2 / mu) + (s - y3 / mu)
        z = cho_solve(chol, rhs)
        Hz = H @ z
        t = soft_threshold(Hz + y1 / mu, 1.0 / mu)
        s = soft_threshold(z + y3 / mu, gamma / mu)
        split = Hz - t
        unit = float(g @ z) - 1.0
        rep = z - s
        y1 += mu * split
        y2 += mu * unit
        y3 += mu * rep
        if history is not None:
            lag = (np.sum(np.abs(t)) + gamma * np.sum(np.abs(s))
                   + y1 @ split + y2 * unit + y3 @ rep
                   + 0.5 * mu * (split @ split + unit * unit + rep @ rep))
            history.append(lag)
        r_split = np.linalg.norm(split)
        r_unit = abs(unit)
        r_rep = np.linalg.norm(rep)
        if (r_split <= cfg.tol * max(1.0, np.linalg.norm(t))
                and r_unit <= cfg.tol
                and r_rep <= cfg.tol * max(1.0, np.linalg.norm(s))):
            converged = True
            break

    a = F @ z
    cost = np.sum(np.abs(Hz)) + gamma * np.sum(np.abs(z))
    res = _finish(Hz, a, z.copy(), basis, cost, iters, converged,
                  (r_split, r_unit, r_rep), history, norm_F)
    return res


def solve_ip_batch(F, constraints, cfg=None):
    """Solve min ||a_j^T F||_1 s.t. a_j^T f_j = 1 for many f_j at once.

    ``constraints`` is (r, n) with one constraint vector per column. One ADMM
    runs over all columns simultaneously; the per-column normal matrices
    mu * (F F^T + f_j f_j^T) are all rank-one updates of mu * F F^T, handled
    with a shared Cholesky factor plus the Sherman-Morrison correction. The
    iteration stops once every column meets the tolerance, so results match
    the per-column solver to within its stopping accuracy.

    Returns
    -------
    A : (r, n) array of solutions (column j solves constraint j).
    converged : (n,) bool array.
    iterations : (n,) int array, iteration at which each column converged
        (max_iters where it did not).
    """
    cfg = cfg or SolverConfig()
    cfg.validate()
    F = np.asarray(F, dtype=float)
    Fq = np.asarray(constraints, dtype=float)
    if Fq.ndim != 2 or Fq.shape[0] != F.shape[0]:
        raise ValueError("constraints must be (r, n) with r matching F")
    bad = np.linalg.norm(Fq, axis=0) < _NUMERICAL_ZERO
    if np.any(bad):
        raise OrthogonalConstraintError(
            "constraint columns %s are orthogonal to the search span"
            % np.flatnonzero(bad).tolist())
    m2 = F.shape[1]
    n = Fq.shape[1]

    norm_F = spectral_norm(F)
    mu = cfg.mu if cfg.mu is not None else 10.0 / max(norm_F, np.finfo(float).tiny)
    chol = _cho(mu * (F @ F.T))
    # Sherman-Morrison pieces for the rank-one updates mu * f_j f_j^T.
    W = cho_solve(chol, Fq)
    denom = 1.0 + mu * np.sum(Fq * W, axis=0)

    A = Fq / np.sum(Fq * Fq, axis=0)
    T = F.T @ A
    Y1 = np.zeros((m2, n))
    y2 = np.zeros(n)

    converged = np.zeros(n, dtype=bool)
    iterations = np.full(n, cfg.max_iters, dtype=int)
    for it in range(1, cfg.max_iters + 1):
        RHS = mu * (F @ T) - F @ Y1 + Fq * (mu - y2)
        X = cho_solve(chol, RHS)
        A = X - W * (mu * np.sum(Fq * X, axis=0) / denom)
        FA = F.T @ A
        T = soft_threshold(FA + Y1 / mu, 1.0 / mu)
        split = FA - T
        unit = np.sum(A * Fq, axis=0) - 1.0
        Y1 += mu * split
        y2 += mu * unit
        ok = ((np.linalg.norm(split, axis=0)
               <= cfg.tol * np.maximum(1.0, np.linalg.norm(T, axis=0)))
              & (np.abs(unit) <= cfg.tol))
        newly = ok & ~converged
        iterations[newly] = it
        converged |= ok
        if converged.all():
            break

    return A, converged, iterations


def lp_oracle(F, f, gamma=None):
    """Solve the identical l1 programs exactly as linear programs.

    Splits each absolute value into a positive and a negative part and hands
    the resulting LP to scipy's HiGHS solver; intended for test-scale
    instances only (r * M2 up to a few thousand). With gamma set, solves the
    sparse-representation objective over z and returns a = F z.

    Returns (cost, direction-coefficients a).
    """
    from scipy.optimize import linprog

    F, f = _check_inputs(F, f)
    r, m2 = F.shape

    if gamma is None:
        # Variables [a (free), t+, t-]; F^T a = t+ - t-, f^T a = 1.
        c = np.concatenate([np.zeros(r), np.ones(2 * m2)])
        a_eq = np.zeros((m2 + 1, r + 2 * m2))
        a_eq[:m2, :r] = F.T
        a_eq[:m2, r:r + m2] = -np.eye(m2)
        a_eq[:m2, r + m2:] = np.eye(m2)
        a_eq[m2, :r] = f
        b_eq = np.concatenate([np.zeros(m2), [1.0]])
        bounds = [(None, None)] * r + [(0, None)] * (2 * m2)
        res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if not res.success:
            raise SolverError("LP oracle failed: %s" % res.message)
        return float(res.fun), res.x[:r]

    # Sparse variant over z: min ||H z||_1 + gamma ||z||_1, g^T z = 1.
    H = F.T @ F
    g = F.T @ f
    c = np.concatenate([np.zeros(m2), np.ones(2 * m2), gamma * np.ones(2 * m2)])
    a_eq = np.zeros((2 * m2 + 1, 5 * m2))
    a_eq[:m2, :m2] = H
    a_eq[:m2, m2:2 * m2] = -np.eye(m2)
    a_eq[:m2, 2 * m2:3 * m2] = np.eye(m2)
    a_eq[m2:2 * m2, :m2] = np.eye(m2)
    a_eq[m2:2 * m2, 3 * m2:4 * m2] = -np.eye(m2)
    a_eq[m2:2 * m2, 4 * m2:] = np.eye(m2)
    a_eq[2 * m2, :m2] = g
    b_eq = np.concatenate([np.zeros(2 * m2), [1.0]])
    bounds = [(None, None)] * m2 + [(0, None)] * (4 * m2)
    res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success:
        raise SolverError("LP oracle failed: %s" % res.message)
    z = res.x[:m2]
    return float(res.fun), F @ z
