"""Benchmark suites.

Five scaled synthetic protocols, each a grid of parameter cells by
independent trials: "phase" sweeps the intersection dimension and compares
constraint-vector choices, "noise" sweeps the intersection under additive
noise, "coherent" sweeps the coherency parameter of clustered data,
"timing" measures runtime growth with the column count, and
"innovation-deficient" exercises the spectral path where clusters jointly
fill the ambient space.

Trials run on a small thread pool (IPURSUIT_THREADS caps the worker count,
0 or unset means auto) and are reproducible regardless of scheduling: trial
t of every cell derives its seed from (seed, t).
"""

import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .datagen import GenSpec, generate, InnovationDeficientWarning
from .evaluation import clustering_error, subspace_success
from .linalg import RankRule, dominant_basis
from .pipeline import (NoViableCandidateError, PipelineConfig, cluster_step,
                       run)
from .solver import SolverConfig
from .spectral import SpectralConfig, dsc

__all__ = [
    "SUITE_NAMES",
    "ExperimentReport",
    "worker_count",
    "derived_seed",
    "run_suite",
]

SUITE_NAMES = ("phase", "noise", "coherent", "timing", "innovation-deficient")


def worker_count():
    """Worker cap from IPURSUIT_THREADS (0 or unset: one per cpu)."""
    raw = os.environ.get("IPURSUIT_THREADS", "").strip()
    if raw in ("", "0"):
        return os.cpu_count() or 1
    count = int(raw)
    if count < 0:
        raise ValueError("IPURSUIT_THREADS must be >= 0")
    return count


def derived_seed(*parts):
    """Stable integer seed from a tuple of integers."""
    return int(np.random.SeedSequence(tuple(int(p) for p in parts))
               .generate_state(1, np.uint64)[0])


@dataclass
class ExperimentReport:
    """Per-trial records plus per-cell aggregates for one suite run."""

    suite: str
    seed: int
    trials_requested: int
    records: list = field(default_factory=list)

    def aggregates(self):
        cells = []
        for record in self.records:
            if record["cell"] not in cells:
                cells.append(record["cell"])
        rows = []
        for cell in cells:
            group = [r for r in self.records if r["cell"] == cell]
            ces = [r["clustering_error"] for r in group
                   if r.get("clustering_error") is not None]
            succ = [r["success"] for r in group if r.get("success") is not None]
            rows.append({
                "cell": cell,
                "trials": len(group),
                "mean_ce": float(np.mean(ces)) if ces else None,
                "median_ce": float(np.median(ces)) if ces else None,
                "success_rate": float(np.mean(succ)) if succ else None,
                "mean_runtime_ms": float(np.mean([r["runtime_ms"]
                                                  for r in group])),
                "failures": sum(1 for r in group if r.get("error")),
            })
        return rows

    def as_dict(self):
        return {
            "kind": "bench",
            "suite": self.suite,
            "seed": self.seed,
            "trials_requested": self.trials_requested,
            "records": self.records,
            "aggregates": self.aggregates(),
        }

    def csv_rows(self):
        """Flat plotting rows: cell fields + trial + ce/success/runtime."""
        keys = sorted({k for r in self.records for k in r["cell"]})
        header = keys + ["trial", "clustering_error", "success", "runtime_ms"]
        rows = [header]
        for r in self.records:
            rows.append([r["cell"].get(k, "") for k in keys]
                        + [r["trial"], r.get("clustering_error", ""),
                           r.get("success", ""), r["runtime_ms"]])
        return rows


def _split_points(total, n_subspaces):
    """Per-cluster point counts summing exactly to the requested total."""
    base = total // n_subspaces
    extra = total - base * n_subspaces
    return tuple(base + (1 if i < extra else 0) for i in range(n_subspaces))


def _even_cells(values, key):
    return [{key: v} for v in values]


def _phase_cells():
    return [{"intersect_dim": y, "q_mode": mode}
            for y in (5, 10, 12, 14)
            for mode in ("least-dominant", "random")]


def _phase_trial(cell, tseed):
    spec = GenSpec(ambient_dim=50, num_subspaces=2, subspace_dim=20,
                   intersect_dim=cell["intersect_dim"],
                   points_per_subspace=200, seed=tseed)
    ds = generate(spec)
    D = ds.data
    U = dominant_basis(D, RankRule(gap=True))
    if cell["q_mode"] == "least-dominant":
        q = U[:, -1]
    else:
        rng = np.random.default_rng(derived_seed(tseed, 1))
        g = rng.standard_normal(U.shape[1])
        q = U @ (g / np.linalg.norm(g))
    cfg = PipelineConfig(max_clusters=2, solver=SolverConfig(gamma=0.0))
    # A disqualified step is a failed trial, not a missing sample; both
    # constraint choices are judged on the same footing.
    try:
        _, F1, F2, _ = cluster_step(D, q[:, None], cfg, basis=U)
    except NoViableCandidateError:
        return {"success": False}
    return {"success": subspace_success(list(ds.bases), [F1, F2], tol=1e-3)}


def _union_cfg(n_subspaces, dim):
    return PipelineConfig(max_clusters=n_subspaces, dim_bound=dim)


def _noise_cells():
    return _even_cells((0, 4, 8, 12, 14), "intersect_dim")


def _noise_trial(cell, tseed):
    spec = GenSpec(ambient_dim=100, num_subspaces=6, subspace_dim=15,
                   intersect_dim=cell["intersect_dim"],
                   points_per_subspace=_split_points(500, 6),
                   noise_ratio=1.0 / 20.0, seed=tseed)
    ds = generate(spec)
    labels, traces = run(ds.data, _union_cfg(6, 15))
    ce = clustering_error(labels.labels, ds.labels).clustering_error
    return {"clustering_error": ce, "steps": len(traces)}


def _coherent_cells():
    return _even_cells((10.0, 2.0, 0.5, 0.25), "coherency")


def _coherent_trial(cell, tseed):
    spec = GenSpec(ambient_dim=100, num_subspaces=6, subspace_dim=15,
                   intersect_dim=13, points_per_subspace=_split_points(500, 6),
                   noise_ratio=1.0 / 5.0, coherency=cell["coherency"],
                   seed=tseed)
    ds = generate(spec)
    labels, traces = run(ds.data, _union_cfg(6, 15))
    ce = clustering_error(labels.labels, ds.labels).clustering_error
    return {"clustering_error": ce, "steps": len(traces)}


def _timing_cells():
    return _even_cells((1200, 12000), "num_points")


def _timing_trial(cell, tseed):
    spec = GenSpec(ambient_dim=50, num_subspaces=3, subspace_dim=10,
                   points_per_subspace=_split_points(cell["num_points"], 3),
                   seed=tseed)
    ds = generate(spec)
    labels, traces = run(ds.data, _union_cfg(3, 10))
    ce = clustering_error(labels.labels, ds.labels).clustering_error
    return {"clustering_error": ce, "steps": len(traces)}


def _deficient_cells():
    return [{"intersect_dim": 4}]


def _deficient_trial(cell, tseed):
    spec = GenSpec(ambient_dim=20, num_subspaces=10, subspace_dim=6,
                   intersect_dim=cell["intersect_dim"],
                   points_per_subspace=60, seed=tseed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InnovationDeficientWarning)
        ds = generate(spec)
    cfg = SpectralConfig(num_clusters=10, dim_bound=6,
                         seed=derived_seed(tseed, 2),
                         rank_rule=RankRule(energy=1.0))
    labels = dsc(ds.data, cfg)
    ce = clustering_error(labels.labels, ds.labels).clustering_error
    return {"clustering_error": ce}


_SUITES = {
    "phase": (_phase_cells, _phase_trial),
    "noise": (_noise_cells, _noise_trial),
    "coherent": (_coherent_cells, _coherent_trial),
    "timing": (_timing_cells, _timing_trial),
    "innovation-deficient": (_deficient_cells, _deficient_trial),
}


def _run_one(trial_fn, cell, trial, tseed):
    start = time.perf_counter()
    record = {"cell": cell, "trial": trial, "seed": tseed,
              "clustering_error": None, "success": None, "steps": None,
              "error": None}
    try:
        record.update(trial_fn(cell, tseed))
    except Exception as exc:  # recorded, not fatal
        record["error"] = "%s: %s" % (type(exc).__name__, exc)
    record["runtime_ms"] = (time.perf_counter() - start) * 1000.0
    return record


def run_suite(suite, trials, seed=0, max_workers=None):
    """Run every cell of a suite for the given trial count.

    Trial t of every cell uses the seed derived from (seed, t), so cells
    see paired datasets and reruns are reproducible. Per-trial exceptions
    are recorded in the report rather than raised.
    """
    if suite not in _SUITES:
        raise ValueError("unknown suite %r (choose from %s)"
                         % (suite, ", ".join(SUITE_NAMES)))
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cells_fn, trial_fn = _SUITES[suite]
    cells = cells_fn()
    jobs = [(cell, t, derived_seed(seed, t))
            for cell in cells for t in range(trials)]

    workers = max_workers if max_workers is not None else worker_count()
    workers = max(1, min(workers, len(jobs)))
    report = ExperimentReport(suite=suite, seed=seed, trials_requested=trials)
    if workers == 1:
        results = [_run_one(trial_fn, *job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda j: _run_one(trial_fn, *j), jobs))
    report.records = results
    return report
