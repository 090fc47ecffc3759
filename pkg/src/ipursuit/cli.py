"""Command-line surface.

Four subcommands: ``gen`` writes synthetic union-of-subspaces data, novel
``cluster`` labels a data file with any of the three methods, ``bench``
runs a named experiment suite, and ``diag`` evaluates the identifiability
diagnostics on a data file. Exit codes: 0 success, 1 algorithmic failure,
2 usage or input error.
"""

import argparse
import sys
import time

import numpy as np

from . import io
from .baselines import KFlatsConfig, kflats
from .datagen import GenSpec, generate
from .diagnostics import (check_theorem1, check_theorem2, permeance)
from .evaluation import clustering_error
from .linalg import RankRule, dominant_basis, orth
from .pipeline import PipelineConfig, PipelineError, run
from .solver import SolverConfig, SolverError
from .spectral import SpectralConfig, dsc
from .suites import SUITE_NAMES, run_suite

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(ValueError):
    pass


def _parse_points(raw):
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise UsageError("--points must be a count or comma-separated counts")
    values = tuple(int(p) for p in parts)
    return values[0] if len(values) == 1 else values


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ipursuit",
        description="Subspace clustering by direction search.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate synthetic data")
    gen.add_argument("--m1", type=int, required=True, help="ambient dimension")
    gen.add_argument("--n-subspaces", type=int, required=True)
    gen.add_argument("--dim", type=int, required=True,
                     help="dimension of every subspace")
    gen.add_argument("--intersect", type=int, default=0,
                     help="shared dimension across subspaces")
    gen.add_argument("--points", type=_parse_points, default=100,
                     help="points per subspace (count or comma list)")
    gen.add_argument("--noise", type=float, default=0.0,
                     help="noise-to-data Frobenius ratio")
    gen.add_argument("--omega", type=float, default=None,
                     help="coherency parameter (omit for uniform data)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="data CSV path")
    gen.add_argument("--labels-out", default=None,
                     help="labels path (default: <out>.labels)")
    gen.add_argument("--clean-out", default=None,
                     help="also write the noiseless matrix here")

    cluster = sub.add_parser("cluster", help="cluster a data CSV")
    cluster.add_argument("--data", required=True)
    cluster.add_argument("--method", choices=("ipursuit", "dsc", "kflats"),
                         default="ipursuit")
    cluster.add_argument("--n-subspaces", type=int, required=True)
    cluster.add_argument("--dim-bound", type=int, default=None)
    cluster.add_argument("--dims", default=None,
                         help="flat dimensions for kflats (count or comma list)")
    cluster.add_argument("--truth", default=None,
                         help="true labels file (adds clustering error)")
    cluster.add_argument("--labels-out", default=None,
                         help="labels path (default: <data>.labels)")
    cluster.add_argument("--report-out", default=None,
                         help="JSON report path")
    cluster.add_argument("--config", default=None,
                         help="JSON config file (pipeline/spectral/solver/"
                              "kflats sections)")
    cluster.add_argument("--seed", type=int, default=0)

    bench = sub.add_parser("bench", help="run an experiment suite")
    bench.add_argument("--suite", choices=SUITE_NAMES, required=True)
    bench.add_argument("--trials", type=int, default=10)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", required=True, help="JSON report path")
    bench.add_argument("--csv-out", default=None,
                       help="flat CSV path (default: <out>.csv)")

    diag = sub.add_parser("diag", help="identifiability diagnostics")
    diag.add_argument("--data", required=True)
    diag.add_argument("--bases", nargs="*", default=None,
                      help="true basis CSVs (two or more enable the "
                           "certificate checks)")
    diag.add_argument("--q-col", type=int, default=None,
                      help="use this data column as the constraint vector")
    diag.add_argument("--num-probes", type=int, default=64)
    diag.add_argument("--seed", type=int, default=0)
    diag.add_argument("--out", default=None,
                      help="JSON report path (default: stdout)")
    return parser


def _load_config(path):
    if path is None:
        return {}
    cfg = io.read_json(path)
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    allowed = {"pipeline", "spectral", "solver", "kflats"}
    unknown = set(cfg) - allowed
    if unknown:
        raise UsageError("unknown config sections: %s"
                         % ", ".join(sorted(unknown)))
    for section, value in cfg.items():
        if not isinstance(value, dict):
            raise UsageError("config section %r must be an object" % section)
    return cfg


def _make_dataclass(cls, fields, label):
    try:
        return cls(**fields)
    except TypeError as exc:
        raise UsageError("bad %s config: %s" % (label, exc))


def cmd_gen(args):
    spec = GenSpec(ambient_dim=args.m1, num_subspaces=args.n_subspaces,
                   subspace_dim=args.dim, intersect_dim=args.intersect,
                   points_per_subspace=args.points, noise_ratio=args.noise,
                   coherency=args.omega, seed=args.seed)
    ds = generate(spec)
    labels_out = args.labels_out or args.out + ".labels"
    io.write_matrix_csv(args.out, ds.data)
    io.write_labels(labels_out, ds.labels)
    if args.clean_out:
        io.write_matrix_csv(args.clean_out, ds.clean)
    print("wrote %s (%d x %d) and %s"
          % (args.out, ds.data.shape[0], ds.data.shape[1], labels_out))
    return EXIT_OK


def cmd_cluster(args):
    D = io.read_matrix_csv(args.data)
    config = _load_config(args.config)
    start = time.perf_counter()
    steps = None

    if args.method == "ipursuit":
        fields = dict(config.get("pipeline", {}))
        if "solver" in fields:
            fields["solver"] = _make_dataclass(SolverConfig, fields["solver"],
                                               "solver")
        elif "solver" in config:
            fields["solver"] = _make_dataclass(SolverConfig, config["solver"],
                                               "solver")
        if "rank_rule" in fields:
            fields["rank_rule"] = _make_dataclass(RankRule,
                                                  fields["rank_rule"],
                                                  "rank_rule")
        fields.setdefault("max_clusters", args.n_subspaces)
        if args.dim_bound is not None:
            fields.setdefault("dim_bound", args.dim_bound)
        cfg = _make_dataclass(PipelineConfig, fields, "pipeline")
        cfg.validate()
        labels, traces = run(D, cfg)
        steps = [t.summary() for t in traces]
    elif args.method == "dsc":
        fields = dict(config.get("spectral", {}))
        if "solver" in fields or "solver" in config:
            raw = fields.pop("solver", None) or config.get("solver", {})
            fields["solver"] = _make_dataclass(SolverConfig, raw, "solver")
        fields.setdefault("num_clusters", args.n_subspaces)
        if args.dim_bound is not None:
            fields.setdefault("dim_bound", args.dim_bound)
        fields.setdefault("seed", args.seed)
        cfg = _make_dataclass(SpectralConfig, fields, "spectral")
        cfg.validate()
        labels = dsc(D, cfg)
    else:
        if args.dims is None:
            raise UsageError("--method kflats requires --dims")
        fields = dict(config.get("kflats", {}))
        fields.setdefault("num_subspaces", args.n_subspaces)
        fields.setdefault("subspace_dims", _parse_points(args.dims))
        fields.setdefault("seed", args.seed)
        cfg = _make_dataclass(KFlatsConfig, fields, "kflats")
        cfg.validate()
        labels = kflats(D, cfg)

    runtime_ms = (time.perf_counter() - start) * 1000.0
    labels_out = args.labels_out or args.data + ".labels"
    io.write_labels(labels_out, labels.labels)

    ce = None
    permutation = None
    if args.truth:
        truth = io.read_labels(args.truth)
        report = clustering_error(labels.labels, truth)
        ce = report.clustering_error
        permutation = report.matched_permutation
    if args.report_out:
        doc = {
            "kind": "cluster",
            "method": args.method,
            "num_points": int(D.shape[1]),
            "num_clusters": int(labels.num_clusters),
            "runtime_ms": runtime_ms,
            "labels_file": labels_out,
            "clustering_error": ce,
            "matched_permutation": permutation,
            "steps": steps if steps is not None else [],
            "failed_direction_solves": None,
        }
        io.write_json(args.report_out, doc, io.CLUSTER_REPORT_SCHEMA)
    if ce is None:
        print("clustered %d points into %d clusters (%.1f ms)"
              % (D.shape[1], labels.num_clusters, runtime_ms))
    else:
        print("clustered %d points into %d clusters (%.1f ms), CE %.4f"
              % (D.shape[1], labels.num_clusters, runtime_ms, ce))
    return EXIT_OK


def cmd_bench(args):
    report = run_suite(args.suite, args.trials, args.seed)
    io.write_json(args.out, report.as_dict(), io.BENCH_REPORT_SCHEMA)
    csv_out = args.csv_out or args.out + ".csv"
    rows = report.csv_rows()
    text = "\n".join(",".join(str(v) for v in row) for row in rows) + "\n"
    io._atomic_write_text(csv_out, text)
    failed = sum(1 for r in report.records if r.get("error"))
    print("suite %s: %d records (%d failed) -> %s, %s"
          % (args.suite, len(report.records), failed, args.out, csv_out))
    return EXIT_FAILURE if failed == len(report.records) else EXIT_OK


def cmd_diag(args):
    D = io.read_matrix_csv(args.data)
    rule = RankRule(gap=True)
    U = dominant_basis(D, rule)
    est, cert = permeance(D, U, args.num_probes, args.seed)
    doc = {
        "kind": "diag",
        "num_points": int(D.shape[1]),
        "ambient_dim": int(D.shape[0]),
        "rank": int(U.shape[1]),
        "permeance_estimate": est,
        "permeance_certified": cert,
        "q_column": args.q_col,
        "theorem": None,
        "coherency": None,
    }

    if args.bases:
        if len(args.bases) < 2:
            raise UsageError("need at least two basis files")
        bases = [orth(io.read_matrix_csv(p)) for p in args.bases]
        proj = np.stack([np.linalg.norm(b.T @ D, axis=0) for b in bases])
        assign = np.argmax(proj, axis=0)
        datasets = [D[:, assign == k] for k in range(len(bases))]
        for k, part in enumerate(datasets):
            if part.shape[1] == 0:
                raise UsageError("no data column is closest to basis %d" % k)
        if args.q_col is not None:
            q = D[:, args.q_col]
        else:
            q = dominant_basis(D, rule)[:, -1]
        if len(bases) == 2:
            report = check_theorem1(datasets[0], datasets[1],
                                    bases[0], bases[1], q,
                                    num_probes=args.num_probes,
                                    seed=args.seed)
        else:
            report = check_theorem2(datasets, bases, q,
                                    num_probes=args.num_probes,
                                    seed=args.seed)
        doc["theorem"] = report.as_dict()
        doc["coherency"] = report.coherency()

    if args.out:
        io.write_json(args.out, doc, io.DIAG_REPORT_SCHEMA)
        print("wrote %s" % args.out)
    else:
        import json
        print(json.dumps(io.jsonable(doc), indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE

    handlers = {"gen": cmd_gen, "cluster": cmd_cluster,
                "bench": cmd_bench, "diag": cmd_diag}
    try:
        return handlers[args.command](args)
    except (UsageError, FileNotFoundError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except (PipelineError, SolverError, np.linalg.LinAlgError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # anything else is an algorithmic failure
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
