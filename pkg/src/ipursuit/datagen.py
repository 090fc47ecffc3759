"""Synthetic union-of-subspaces data generation.

Datasets are unions of N d-dimensional subspaces of R^M1 that share a common
y-dimensional subspace, with unit-norm points drawn inside each subspace,
optional additive Gaussian noise of prescribed relative Frobenius norm, and
an optional coherent (concentrated) point distribution. All randomness flows
from a single seed through independent derived streams, so generation is
bit-reproducible and each subspace could be drawn in parallel.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .linalg import project_off

__all__ = [
    "GenSpec",
    "GeneratedDataset",
    "InnovationDeficientWarning",
    "gen_union",
    "gen_coherent",
    "generate",
    "add_noise",
]


class InnovationDeficientWarning(UserWarning):
    """The requested geometry cannot give every subspace its own innovation.

    Raised (as a warning, not an error) when y + N*(d - y) > M1: the subspaces
    then necessarily overlap beyond the designed intersection. This regime is
    a legitimate test target for the spectral path, so generation proceeds.
    """


@dataclass(frozen=True)
class GenSpec:
    """Parameters of a generated union-of-subspaces dataset.

    ambient_dim        M1, ambient dimension.
    num_subspaces      N, number of subspaces.
    subspace_dim       d, dimension of every subspace.
    intersect_dim      y, dimension of the common intersection (0 <= y < d).
    points_per_subspace  int (uniform) or a sequence of N counts.
    noise_ratio        tau = ||E||_F / ||D||_F; 0 means clean data only.
    coherency          omega > 0 for concentrated coefficients, or None for
                       uniform standard-normal coefficients.
    seed               master seed; identical specs produce identical data.
    """

    ambient_dim: int
    num_subspaces: int
    subspace_dim: int
    intersect_dim: int = 0
    points_per_subspace: object = 100
    noise_ratio: float = 0.0
    coherency: object = None
    seed: int = 0

    def counts(self):
        n = self.points_per_subspace
        if np.isscalar(n):
            return [int(n)] * self.num_subspaces
        counts = [int(c) for c in n]
        if len(counts) != self.num_subspaces:
            raise ValueError("points_per_subspace has %d entries for %d subspaces"
                             % (len(counts), self.num_subspaces))
        return counts

    def validate(self):
        if self.num_subspaces < 1:
            raise ValueError("need at least one subspace")
        if not 0 <= self.intersect_dim < self.subspace_dim:
            raise ValueError("need 0 <= intersect_dim < subspace_dim")
        if self.subspace_dim > self.ambient_dim:
            raise ValueError("subspace_dim exceeds ambient_dim")
        if any(c < 1 for c in self.counts()):
            raise ValueError("every subspace needs at least one point")
        if self.noise_ratio < 0:
            raise ValueError("noise_ratio must be >= 0")
        if self.coherency is not None and not self.coherency > 0:
            raise ValueError("coherency must be positive when set")
        total = self.intersect_dim + self.num_subspaces * (
            self.subspace_dim - self.intersect_dim)
        if total > self.ambient_dim:
            warnings.warn(
                "union of subspaces needs dimension %d > ambient %d; "
                "subspaces will lack individual innovation" % (total, self.ambient_dim),
                InnovationDeficientWarning, stacklevel=3)


@dataclass
class GeneratedDataset:
    """A generated dataset: clean matrix, optional noisy matrix, truth."""

    clean: np.ndarray
    noisy: object  # ndarray when noise_ratio > 0, else None
    labels: np.ndarray
    bases: list
    mean_directions: object  # list of coefficient-space unit vectors, or None
    spec: GenSpec = field(repr=False, default=None)

    @property
    def data(self):
        """The matrix an algorithm should consume (noisy when available)."""
        return self.clean if self.noisy is None else self.noisy


def _orthonormal_columns(raw):
    q, _ = np.linalg.qr(raw)
    return q[:, :raw.shape[1]]


def _generate(spec):
    spec.validate()
    m1 = spec.ambient_dim
    n_sub = spec.num_subspaces
    d = spec.subspace_dim
    y = spec.intersect_dim
    counts = spec.counts()
    coherent = spec.coherency is not None

    root = np.random.SeedSequence(spec.seed)
    # Fixed stream layout: common subspace, column shuffle, noise, then one
    # stream per subspace, so adding noise never perturbs the geometry.
    ss_common, ss_shuffle, ss_noise, *ss_subs = root.spawn(3 + n_sub)

    common = None
    if y > 0:
        rng = np.random.default_rng(ss_common)
        common = _orthonormal_columns(rng.standard_normal((m1, y)))

    bases = []
    blocks = []
    mean_dirs = [] if coherent else None
    for i in range(n_sub):
        rng = np.random.default_rng(ss_subs[i])
        extra = rng.standard_normal((m1, d - y))
        if common is not None:
            extra = project_off(common, extra)
        extra = _orthonormal_columns(extra)
        basis = extra if common is None else np.hstack([common, extra])
        bases.append(basis)

        if coherent:
            a_i = rng.standard_normal(d)
            a_i /= np.linalg.norm(a_i)
            mean_dirs.append(a_i)
            g_hat = rng.standard_normal((d, counts[i]))
            g_hat /= np.linalg.norm(g_hat, axis=0)
            coeffs = a_i[:, None] + spec.coherency * g_hat
        else:
            coeffs = rng.standard_normal((d, counts[i]))
        points = basis @ coeffs
        points /= np.linalg.norm(points, axis=0)
        blocks.append(points)

    clean = np.hstack(blocks)
    labels = np.repeat(np.arange(n_sub), counts)
    perm = np.random.default_rng(ss_shuffle).permutation(clean.shape[1])
    clean = clean[:, perm]
    labels = labels[perm]

    noisy = None
    if spec.noise_ratio > 0:
        noisy = add_noise(clean, spec.noise_ratio, ss_noise)

    return GeneratedDataset(clean=clean, noisy=noisy, labels=labels,
                            bases=bases, mean_directions=mean_dirs, spec=spec)


def gen_union(spec):
    """Generate a dataset with uniform (standard normal) coefficients.

    Subspace i is M (+) R_i: M is a common y-dimensional random subspace and
    R_i is a random (d - y)-dimensional subspace drawn in the orthogonal
    complement of M, so the intersection has dimension exactly y. Points are
    V_i g with g ~ N(0, I), normalized to unit columns, and the column order
    is shuffled by a seeded permutation.
    """
    if spec.coherency is not None:
        raise ValueError("spec requests coherent data; use gen_coherent")
    return _generate(spec)


def gen_coherent(spec):
    """Generate a dataset with concentrated coefficients g = a_i + omega * g_hat.

    a_i is a fixed unit vector per subspace (drawn uniformly on the sphere of
    the coefficient space) and g_hat is uniform on the unit sphere; smaller
    omega concentrates the points around a_i. The ambient-space column is
    normalized, which normalizes g as a side effect.
    """
    if spec.coherency is None:
        raise ValueError("gen_coherent needs a finite coherency omega")
    return _generate(spec)


def generate(spec):
    """Dispatch to gen_union or gen_coherent based on spec.coherency."""
    return gen_coherent(spec) if spec.coherency is not None else gen_union(spec)


def add_noise(D, tau, seed):
    """Return D + E with E iid Gaussian rescaled so ||E||_F/||D||_F == tau."""
    D = np.asarray(D, dtype=float)
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if tau == 0:
        return D.copy()
    rng = np.random.default_rng(seed)
    E = rng.standard_normal(D.shape)
    E *= tau * np.linalg.norm(D) / np.linalg.norm(E)
    return D + E
