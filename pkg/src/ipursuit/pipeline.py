"""Iterative subspace clustering by direction search.

One cluster is identified per step. A constraint vector is picked near the
least dominant singular direction of the remaining data (that direction
leans away from dominant clusters, so the search tends to carve off a whole
cluster), the sparse direction search produces a response vector over the
remaining points, the strongest responders are pruned of stragglers and
spanned by a basis F1, the rest of the data is spanned by a complementary
basis F2, and every remaining point joins whichever side projects on it
more. Identified points are removed and the process repeats; the final
remainder forms the last cluster. A correction sweep then reassigns every
point to the closest recovered subspace.

Guards handle the two ways a step can go wrong: a constraint vector drawn
from an almost exhausted cluster makes the response vector too sparse (the
candidate is skipped), and several candidates can disagree (the one whose
two sides are farthest apart wins).
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .linalg import (RankRule, dominant_basis, project_off,
                     subspace_distance)
from .solver import SolverConfig, solve_ip_sparse

__all__ = [
    "PipelineConfig",
    "ClusterLabels",
    "StepTrace",
    "PipelineError",
    "NoViableCandidateError",
    "select_constraint_candidates",
    "detect_too_sparse",
    "prune_gram",
    "cluster_step",
    "error_correct",
    "run",
]

# Above this many remaining columns the sparse-representation term is
# dropped (gamma = 0): its subproblem is quadratic in the column count while
# the plain search stays linear.
_SPARSE_COLUMN_LIMIT = 2000


class PipelineError(Exception):
    """Base class for clustering-pipeline failures."""


class NoViableCandidateError(PipelineError):
    """Every candidate constraint vector produced a too-sparse response."""


@dataclass(frozen=True)
class PipelineConfig:
    """Settings for the iterative pipeline.

    max_clusters      how many clusters to look for (the last one is the
                      remainder, so max_clusters - 1 steps run).
    min_remaining     stop splitting once this few columns remain; None
                      derives dim_bound + 1 (or 2).
    inner_threshold   response cutoff in (0, 1) for the identified side.
    top_kappa         count alternative to inner_threshold: take the kappa
                      strongest responders. Exactly one of the two modes is
                      active; with both None, top_kappa = 2 * dim_bound when
                      a dimension bound is given, else inner_threshold 0.1.
    outer_threshold   residual-norm cutoff for the complementary side.
    outer_top         count alternative to outer_threshold.
    prune_percent     percent of weakly correlated columns dropped before
                      fitting a basis (0 to 50).
    num_candidates    constraint vectors tried per step.
    sparse_frac       fraction of the remaining columns below which a
                      response support counts as too sparse.
    correction_passes reassignment sweeps after the main loop.
    dim_bound         optional upper bound on any cluster's dimension.
    solver            direction-search settings (None: defaults).
    rank_rule         how basis ranks are chosen (None: largest spectral
                      gap, which adapts as clusters are removed).
    """

    max_clusters: int = 2
    min_remaining: int = None
    inner_threshold: float = None
    top_kappa: int = None
    outer_threshold: float = None
    outer_top: int = None
    prune_percent: float = 10.0
    num_candidates: int = 2
    sparse_frac: float = 0.02
    correction_passes: int = 2
    dim_bound: int = None
    solver: SolverConfig = None
    rank_rule: RankRule = None

    def validate(self):
        if self.max_clusters < 1:
            raise ValueError("max_clusters must be >= 1")
        if self.min_remaining is not None and self.min_remaining < 1:
            raise ValueError("min_remaining must be >= 1")
        if self.inner_threshold is not None and self.top_kappa is not None:
            raise ValueError("inner_threshold and top_kappa are exclusive")
        if (self.inner_threshold is not None
                and not 0.0 < self.inner_threshold < 1.0):
            raise ValueError("inner_threshold must be in (0, 1)")
        if self.top_kappa is not None and self.top_kappa < 1:
            raise ValueError("top_kappa must be >= 1")
        if self.outer_threshold is not None and self.outer_top is not None:
            raise ValueError("outer_threshold and outer_top are exclusive")
        if (self.outer_threshold is not None
                and not 0.0 < self.outer_threshold < 1.0):
            raise ValueError("outer_threshold must be in (0, 1)")
        if not 0.0 <= self.prune_percent <= 50.0:
            raise ValueError("prune_percent must be in [0, 50]")
        if self.num_candidates < 1:
            raise ValueError("num_candidates must be >= 1")
        if not 0.0 < self.sparse_frac < 1.0:
            raise ValueError("sparse_frac must be in (0, 1)")
        if self.correction_passes < 0:
            raise ValueError("correction_passes must be >= 0")
        if self.dim_bound is not None and self.dim_bound < 1:
            raise ValueError("dim_bound must be >= 1")

    # Resolved views of the defaulted fields.

    def resolved_inner(self):
        """Returns ("kappa", count) or ("threshold", cutoff)."""
        if self.top_kappa is not None:
            return "kappa", self.top_kappa
        if self.inner_threshold is not None:
            return "threshold", self.inner_threshold
        if self.dim_bound is not None:
            return "kappa", 2 * self.dim_bound
        return "threshold", 0.1

    def resolved_outer(self):
        if self.outer_top is not None:
            return "top", self.outer_top
        return "threshold", (0.1 if self.outer_threshold is None
                             else self.outer_threshold)

    def resolved_min_remaining(self):
        if self.min_remaining is not None:
            return self.min_remaining
        return self.dim_bound + 1 if self.dim_bound is not None else 2

    def resolved_rank_rule(self, cap=None, floor=None, knee_floor=None):
        """The rank rule with structural bounds merged in.

        ``floor`` raises the picked rank (a complement holding k clusters
        needs at least k directions). ``knee_floor`` restricts the gap
        search itself (a union of clusters cannot be narrower than one
        cluster, so an earlier knee is structural, not the noise edge).
        ``cap`` wins when they conflict. Per-cluster fits pass none of
        them, since a pruned or coherent cluster can genuinely show fewer
        strong directions.
        """
        rule = self.rank_rule if self.rank_rule is not None \
            else RankRule(gap=True)
        lo = rule.min_rank
        if floor is not None:
            lo = floor if lo is None else max(lo, floor)
        knee = rule.gap_floor
        if knee_floor is not None and rule.gap:
            knee = knee_floor if knee is None else max(knee, knee_floor)
        hi = rule.max_rank
        if cap is not None:
            hi = cap if hi is None else min(hi, cap)
        if (lo, hi, knee) == (rule.min_rank, rule.max_rank, rule.gap_floor):
            return rule
        return RankRule(rank=rule.rank, energy=rule.energy, gap=rule.gap,
                        max_rank=hi, min_rank=lo, gap_floor=knee)

    def resolved_solver(self, num_cols):
        cfg = self.solver if self.solver is not None else SolverConfig()
        if cfg.gamma is None and num_cols > _SPARSE_COLUMN_LIMIT:
            cfg = replace(cfg, gamma=0.0)
        return cfg


@dataclass
class ClusterLabels:
    """A 0-based cluster id per data column."""

    labels: np.ndarray
    num_clusters: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)

    def __len__(self):
        return self.labels.size


@dataclass
class StepTrace:
    """Record of one identification step."""

    step: int
    remaining_before: int
    candidate_ids: list
    q_index: object
    h1: np.ndarray
    identified_count: int
    f1_dim: int
    f2_dim: int
    too_sparse_skips: int
    chosen_distance: float

    def summary(self):
        return {
            "step": self.step,
            "remaining_before": self.remaining_before,
            "q_index": None if self.q_index is None else int(self.q_index),
            "identified_count": self.identified_count,
            "f1_dim": self.f1_dim,
            "f2_dim": self.f2_dim,
            "too_sparse_skips": self.too_sparse_skips,
            "chosen_distance": self.chosen_distance,
        }


def select_constraint_candidates(D_e, Q, m):
    """Indices of the m columns most aligned with the least dominant
    direction of the data (the last column of Q), ties to the lower index."""
    D_e = np.asarray(D_e, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if not 1 <= m <= D_e.shape[1]:
        raise ValueError("m must be in [1, %d]" % D_e.shape[1])
    coherence = np.abs(D_e.T @ Q[:, -1])
    order = np.argsort(-coherence, kind="stable")
    return order[:m].copy()


def detect_too_sparse(h1, cfg):
    """Whether a (max-normalized) response vector has too few significant
    entries to be a full cluster.

    The support is counted above the inner threshold (0.1 in top-kappa
    mode); it must reach both sparse_frac of the remaining columns and the
    expected basis size (kappa + 1, or dim_bound + 1 in threshold mode).
    """
    h1 = np.asarray(h1, dtype=float)
    mode, value = cfg.resolved_inner()
    level = value if mode == "threshold" else 0.1
    count = int(np.sum(h1 > level))
    cutoff = cfg.sparse_frac * h1.size
    if mode == "kappa":
        cutoff = max(cutoff, value + 1)
    elif cfg.dim_bound is not None:
        cutoff = max(cutoff, cfg.dim_bound + 1)
    return count < cutoff


def prune_gram(G1, beta):
    """Drop the beta percent of columns least correlated with the rest.

    Ranks columns by the l2 norms of the columns of G1^T G1 and keeps the
    ceil(cols * (1 - beta/100)) strongest, preserving their order.
    """
    G1 = np.asarray(G1, dtype=float)
    if not 0.0 <= beta <= 50.0:
        raise ValueError("beta must be in [0, 50]")
    n = G1.shape[1]
    keep = int(math.ceil(n * (1.0 - beta / 100.0)))
    if keep >= n:
        return G1.copy()
    norms = np.linalg.norm(G1.T @ G1, axis=0)
    order = np.argsort(-norms, kind="stable")[:keep]
    return G1[:, np.sort(order)]


def _candidate_list(D_e, candidate_qs):
    """Normalize candidates to (q vector, column index or None) pairs."""
    if isinstance(candidate_qs, np.ndarray) and candidate_qs.ndim == 2:
        return [(candidate_qs[:, j], None)
                for j in range(candidate_qs.shape[1])]
    indices = np.asarray(candidate_qs, dtype=int).ravel()
    return [(D_e[:, j], int(j)) for j in indices]


def cluster_step(D_e, candidate_qs, cfg, basis=None, complement_rank=None):
    """One identification step.

    candidate_qs is either an array of column indices into D_e or an
    (M1, k) array of explicit constraint vectors. Each candidate is solved
    in the span of the dominant basis of D_e (pass ``basis`` to reuse a
    precomputed one); too-sparse responses are skipped, and among the
    survivors the candidate whose two sides are farthest apart wins.

    complement_rank, when given, floors the complementary side's basis at
    that many directions. A complement holding k clusters needs at least k
    directions, or the side-by-side comparison collapses to the nearest of
    two lines and nearby clusters defect across it.

    Returns (identified_mask, F1, F2, StepTrace).
    """
    cfg.validate()
    D_raw = np.asarray(D_e, dtype=float)
    n = D_raw.shape[1]
    if basis is None:
        basis = dominant_basis(D_raw,
                               cfg.resolved_rank_rule(knee_floor=cfg.dim_bound))
    U = basis
    F = U.T @ D_raw
    # The span of the dominant basis carries the clusters; the residual is
    # noise, so responses, residuals and the final comparison all run on
    # the projected columns. Identical to D_raw when the data is clean.
    D_e = U @ F
    scfg = cfg.resolved_solver(n)

    mode, value = cfg.resolved_inner()
    outer_mode, outer_value = cfg.resolved_outer()
    best = None
    skips = 0
    for q, q_index in _candidate_list(D_e, candidate_qs):
        res = solve_ip_sparse(F, U.T @ q, scfg)
        c_star = U @ res.coeffs
        h1 = np.abs(c_star @ D_e)
        h1 /= max(h1.max(), np.finfo(float).tiny)
        if detect_too_sparse(h1, cfg):
            skips += 1
            continue

        if mode == "kappa":
            g1_idx = np.sort(np.argsort(-h1, kind="stable")[:min(value, n)])
        else:
            g1_idx = np.flatnonzero(h1 > value)
        # Both bases are fit from the unprojected columns: the projection
        # leaves an exact-zero tail that masquerades as a spectral knee,
        # inflating the fit with noise directions. The raw spectrum shows
        # the true noise floor instead.
        G1 = prune_gram(D_raw[:, g1_idx], cfg.prune_percent)
        # The identified side must stay a proper subspace of the working
        # span, whatever the rank rule says.
        cap = max(U.shape[1] - 1, 1)
        if cfg.dim_bound is not None:
            cap = min(cfg.dim_bound, cap)
        F1 = dominant_basis(G1, cfg.resolved_rank_rule(cap=cap))

        h2 = np.linalg.norm(project_off(F1, D_e), axis=0)
        h2 /= max(h2.max(), np.finfo(float).tiny)
        if outer_mode == "top":
            order2 = np.argsort(-h2, kind="stable")[:min(outer_value, n)]
            g2_idx = np.sort(order2)
        else:
            g2_idx = np.flatnonzero(h2 > outer_value)
        if g2_idx.size:
            F2 = dominant_basis(D_raw[:, g2_idx],
                                cfg.resolved_rank_rule(floor=complement_rank))
        else:
            F2 = np.zeros((D_e.shape[0], 0))

        mask = (np.linalg.norm(F1.T @ D_e, axis=0)
                >= np.linalg.norm(F2.T @ D_e, axis=0))
        if g2_idx.size:
            lo = min(cfg.resolved_min_remaining(), n)
            if mask.sum() < lo or mask.all():
                # Fewer points than one cluster needs to span itself, or
                # no complement at all: a degenerate direction, however
                # far its two sides are apart.
                skips += 1
                continue
            # One correction round inside the step: refit both sides from
            # the partition itself. The complement now contains every
            # unidentified column, so a cluster the residual selection
            # undersampled cannot defect into the identified side.
            F1 = dominant_basis(D_raw[:, mask],
                                cfg.resolved_rank_rule(cap=cap))
            F2 = dominant_basis(D_raw[:, ~mask],
                                cfg.resolved_rank_rule(floor=complement_rank))
            mask = (np.linalg.norm(F1.T @ D_e, axis=0)
                    >= np.linalg.norm(F2.T @ D_e, axis=0))
            if mask.sum() < lo or mask.all():
                skips += 1
                continue
        dist = subspace_distance(F1, F2) if F2.shape[1] else 1.0
        # Complementary orientations of one partition tie in distance, so
        # ties resolve structurally: peel the thinner side first (a merged
        # pair of clusters is wider than either member), then the smaller
        # one. The larger side stays in the remainder where later steps
        # can still split it.
        order = (F1.shape[1], int(mask.sum()))
        if best is None:
            best = (dist, mask, F1, F2, h1, q_index, order)
        else:
            tol = 1e-6 * max(1.0, best[0])
            if dist > best[0] + tol or (dist > best[0] - tol
                                        and order < best[6]):
                best = (dist, mask, F1, F2, h1, q_index, order)

    if best is None:
        raise NoViableCandidateError(
            "no viable constraint vector: every candidate gave a too-sparse "
            "response (a nearly exhausted cluster or too strict sparse_frac)")

    dist, mask, F1, F2, h1, q_index, _ = best
    trace = StepTrace(
        step=-1, remaining_before=n,
        candidate_ids=[i for _, i in _candidate_list(D_e, candidate_qs)],
        q_index=q_index, h1=h1, identified_count=int(mask.sum()),
        f1_dim=F1.shape[1], f2_dim=F2.shape[1],
        too_sparse_skips=skips, chosen_distance=float(dist))
    return mask, F1, F2, trace


def error_correct(D_e, labels, beta=10.0, passes=2, rank_rule=None,
                  dim_bound=None):
    """Reassign every point to the closest recovered subspace.

    Per pass: prune each cluster's columns, fit a basis to the remainder,
    then relabel every point by the largest projection norm. Clusters left
    empty by a pass are dropped and the ids renumbered. Deterministic;
    passes=0 returns the input labels unchanged.
    """
    D_e = np.asarray(D_e, dtype=float)
    labels = np.asarray(labels, dtype=int).copy()
    if labels.size != D_e.shape[1]:
        raise ValueError("labels length %d does not match %d columns"
                         % (labels.size, D_e.shape[1]))
    rule = rank_rule if rank_rule is not None else RankRule(gap=True)
    if dim_bound is not None:
        cap = dim_bound if rule.max_rank is None \
            else min(rule.max_rank, dim_bound)
        rule = RankRule(rank=rule.rank, energy=rule.energy, gap=rule.gap,
                        max_rank=cap)

    for _ in range(passes):
        ids = np.unique(labels)
        proj = np.empty((ids.size, D_e.shape[1]))
        for row, k in enumerate(ids):
            cluster = D_e[:, labels == k]
            basis = dominant_basis(prune_gram(cluster, beta), rule)
            proj[row] = np.linalg.norm(basis.T @ D_e, axis=0)
        labels = ids[np.argmax(proj, axis=0)]
        survivors, labels = np.unique(labels, return_inverse=True)

    ids = np.unique(labels)
    remap = {int(k): i for i, k in enumerate(ids)}
    labels = np.array([remap[int(k)] for k in labels], dtype=int)
    return ClusterLabels(labels=labels, num_clusters=ids.size)


def run(D_e, cfg):
    """Cluster all columns of D_e.

    Runs identification steps until max_clusters - 1 clusters are found or
    at most min_remaining columns remain, labels the remainder as the last
    cluster, then applies the correction sweeps. If every candidate in a
    step is too sparse the candidate count is doubled once before giving
    up.

    Returns (ClusterLabels, list of StepTrace).
    """
    cfg.validate()
    D_e = np.asarray(D_e, dtype=float)
    n = D_e.shape[1]
    if n < 2:
        raise ValueError("need at least 2 columns")

    labels = np.full(n, -1, dtype=int)
    remaining = np.arange(n)
    traces = []
    cluster_id = 0
    min_remaining = cfg.resolved_min_remaining()

    while cluster_id < cfg.max_clusters - 1 and remaining.size > min_remaining:
        D_rem = D_e[:, remaining]
        U = dominant_basis(D_rem,
                           cfg.resolved_rank_rule(knee_floor=cfg.dim_bound))
        m = min(cfg.num_candidates, remaining.size)
        others = cfg.max_clusters - cluster_id - 1
        step_cfg = cfg
        if (cfg.dim_bound is not None and cfg.outer_threshold is None
                and cfg.outer_top is None):
            # With noise the complementary side must not absorb the
            # identified cluster's noise-level residuals, so cap it at a
            # spanning count for the clusters still expected.
            top = min(2 * cfg.dim_bound * max(others, 1), remaining.size - 1)
            step_cfg = replace(cfg, outer_top=max(top, 1))
        try:
            cands = select_constraint_candidates(D_rem, U, m)
            mask, F1, F2, trace = cluster_step(D_rem, cands, step_cfg,
                                               basis=U, complement_rank=others)
        except NoViableCandidateError:
            try:
                m = min(2 * cfg.num_candidates, remaining.size)
                cands = select_constraint_candidates(D_rem, U, m)
                mask, F1, F2, trace = cluster_step(D_rem, cands, step_cfg,
                                                   basis=U,
                                                   complement_rank=others)
            except NoViableCandidateError:
                # No direction separates the remaining columns; stop
                # identifying and let them form the final cluster.
                break
        share = remaining.size / (cfg.max_clusters - cluster_id)
        weak = (mask.sum() < 0.6 * share
                or mask.sum() > 1.7 * share
                or trace.chosen_distance < 0.5 / max(trace.f1_dim, 1))
        if weak and m < remaining.size:
            # A grab far from the remainder's per-cluster share in either
            # direction, or an identified subspace less than half an
            # innovation dimension away from its complement, signals a
            # degenerate or merging direction. Widen the pool and re-pick;
            # the wider pool contains the old one, so the selection can
            # only improve.
            m = min(6 * cfg.num_candidates, remaining.size)
            cands = select_constraint_candidates(D_rem, U, m)
            mask, F1, F2, trace = cluster_step(D_rem, cands, step_cfg,
                                               basis=U, complement_rank=others)
        trace.step = len(traces)
        trace.candidate_ids = [int(remaining[i]) for i in cands]
        if trace.q_index is not None:
            trace.q_index = int(remaining[trace.q_index])
        traces.append(trace)

        labels[remaining[mask]] = cluster_id
        cluster_id += 1
        remaining = remaining[~mask]

    if remaining.size:
        labels[remaining] = cluster_id
        cluster_id += 1

    result = ClusterLabels(labels=labels, num_clusters=cluster_id)
    if cfg.correction_passes > 0:
        D_fit = D_e
        if cfg.dim_bound is not None:
            # Same denoising as the steps; the bound keeps the per-cluster
            # refits from absorbing the projected noise directions.
            rule0 = cfg.resolved_rank_rule(knee_floor=cfg.dim_bound)
            U0 = dominant_basis(D_e, rule0)
            D_fit = U0 @ (U0.T @ D_e)
        result = error_correct(D_fit, result.labels, cfg.prune_percent,
                               cfg.correction_passes,
                               cfg.rank_rule, cfg.dim_bound)
    return result, traces
