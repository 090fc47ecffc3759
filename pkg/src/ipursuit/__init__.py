"""Subspace clustering by searching for directions of innovation.

The package finds the optimal direction in a union of subspaces that is
orthogonal to all clusters but one, peels that cluster off, and repeats.
It also ships a spectral variant built from the same direction searches,
a k-flats baseline, identifiability diagnostics, synthetic data
generation, and a benchmark harness.
"""

from .baselines import KFlatsConfig, kflats
from .datagen import (GeneratedDataset, GenSpec, InnovationDeficientWarning,
                      add_noise, gen_coherent, gen_union, generate)
from .diagnostics import (Lemma2Report, NoInnovationError, TheoremReport,
                          check_theorem1, check_theorem2,
                          check_theorem2_simplified, coherency,
                          innovation_subspace, lemma2_bound, permeance,
                          solve_oracle)
from .evaluation import (EvalReport, assignment_solve, clustering_error,
                         subspace_success)
from .linalg import (RankRule, dominant_basis, least_dominant_direction,
                     orth, project_off, rank_from_singular_values,
                     spectral_norm, subspace_distance, svd)
from .pipeline import (ClusterLabels, NoViableCandidateError, PipelineConfig,
                       PipelineError, StepTrace, cluster_step,
                       detect_too_sparse, error_correct, prune_gram, run,
                       select_constraint_candidates)
from .solver import (DegenerateDirectionError, DirectionResult,
                     OrthogonalConstraintError, SolverConfig, SolverError,
                     default_gamma, lp_oracle, soft_threshold, solve_ip,
                     solve_ip_batch, solve_ip_sparse)
from .spectral import (SpectralConfig, build_similarity, direction_matrix,
                       dsc, spectral_cluster)
from .suites import (SUITE_NAMES, ExperimentReport, derived_seed, run_suite,
                     worker_count)

__version__ = "0.1.0"

__all__ = [
    "ClusterLabels",
    "DegenerateDirectionError",
    "DirectionResult",
    "EvalReport",
    "ExperimentReport",
    "GenSpec",
    "GeneratedDataset",
    "InnovationDeficientWarning",
    "KFlatsConfig",
    "Lemma2Report",
    "NoInnovationError",
    "NoViableCandidateError",
    "OrthogonalConstraintError",
    "PipelineConfig",
    "PipelineError",
    "RankRule",
    "SolverConfig",
    "SolverError",
    "SpectralConfig",
    "StepTrace",
    "SUITE_NAMES",
    "TheoremReport",
    "add_noise",
    "assignment_solve",
    "build_similarity",
    "check_theorem1",
    "check_theorem2",
    "check_theorem2_simplified",
    "cluster_step",
    "clustering_error",
    "coherency",
    "default_gamma",
    "derived_seed",
    "detect_too_sparse",
    "direction_matrix",
    "dominant_basis",
    "dsc",
    "error_correct",
    "gen_coherent",
    "gen_union",
    "generate",
    "innovation_subspace",
    "kflats",
    "least_dominant_direction",
    "lemma2_bound",
    "lp_oracle",
    "orth",
    "permeance",
    "project_off",
    "prune_gram",
    "rank_from_singular_values",
    "run",
    "run_suite",
    "select_constraint_candidates",
    "soft_threshold",
    "solve_ip",
    "solve_ip_batch",
    "solve_ip_sparse",
    "solve_oracle",
    "spectral_cluster",
    "spectral_norm",
    "subspace_distance",
    "subspace_success",
    "svd",
    "worker_count",
    "__version__",
]
