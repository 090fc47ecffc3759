"""File formats and report schemas.

Data matrices travel as plain CSV (one row per ambient coordinate, one
column per point, entries printed with enough digits to round-trip
exactly), labels as one 0-based integer per line, and reports as UTF-8
JSON with sorted keys. All writes go to a temporary file in the target
directory followed by an atomic rename. Reports are validated against the
published schemas below by a small self-contained validator.
"""

import json
import math
import os
import tempfile

import numpy as np

__all__ = [
    "SchemaError",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_labels",
    "read_labels",
    "write_json",
    "read_json",
    "validate_schema",
    "jsonable",
    "CLUSTER_REPORT_SCHEMA",
    "BENCH_REPORT_SCHEMA",
    "DIAG_REPORT_SCHEMA",
]


class SchemaError(ValueError):
    """A report does not match its published schema."""


def _atomic_write_text(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix_csv(path, M):
    """Write a matrix as CSV, %.17g per entry (lossless for doubles)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    lines = [",".join("%.17g" % v for v in row) for row in M]
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_matrix_csv(path):
    if not os.path.exists(path):
        raise FileNotFoundError("no such data file: %s" % path)
    M = np.loadtxt(path, delimiter=",", ndmin=2)
    if not np.all(np.isfinite(M)):
        raise ValueError("%s contains non-finite entries" % path)
    return M


def write_labels(path, labels):
    """One 0-based integer per line."""
    labels = np.asarray(labels, dtype=int).ravel()
    _atomic_write_text(path, "\n".join(str(int(v)) for v in labels) + "\n")


def read_labels(path):
    if not os.path.exists(path):
        raise FileNotFoundError("no such labels file: %s" % path)
    with open(path, encoding="utf-8") as handle:
        labels = [int(line) for line in handle if line.strip()]
    return np.array(labels, dtype=int)


def jsonable(value):
    """Recursively convert numpy scalars/arrays and non-finite floats
    (which strict JSON cannot carry) into plain JSON values."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(path, obj, schema=None):
    """Validate (optionally) and atomically write a JSON document."""
    obj = jsonable(obj)
    if schema is not None:
        errors = validate_schema(obj, schema)
        if errors:
            raise SchemaError("; ".join(errors))
    _atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    if not os.path.exists(path):
        raise FileNotFoundError("no such report file: %s" % path)
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def _type_ok(value, name):
    if name == "null":
        return value is None
    if name == "boolean":
        return isinstance(value, bool)
    if name == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if name == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if name == "string":
        return isinstance(value, str)
    if name == "array":
        return isinstance(value, list)
    if name == "object":
        return isinstance(value, dict)
    raise ValueError("unknown schema type %r" % name)


def validate_schema(value, schema, path="$"):
    """Check a JSON value against a schema subset; returns error strings.

    Supported keywords: type (string or list), enum, minimum, maximum,
    properties, required, additionalProperties (bool or schema), items.
    """
    errors = []
    stated = schema.get("type")
    if stated is not None:
        names = [stated] if isinstance(stated, str) else list(stated)
        if not any(_type_ok(value, n) for n in names):
            errors.append("%s: expected %s, got %s"
                          % (path, "/".join(names), type(value).__name__))
            return errors
    if "enum" in schema and value not in schema["enum"]:
        errors.append("%s: %r not in %r" % (path, value, schema["enum"]))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if "minimum" in schema and value < schema["minimum"]:
            errors.append("%s: %r below minimum %r"
                          % (path, value, schema["minimum"]))
        if "maximum" in schema and value > schema["maximum"]:
            errors.append("%s: %r above maximum %r"
                          % (path, value, schema["maximum"]))
    if isinstance(value, dict):
        props = schema.get("properties", {})
        for key in schema.get("required", []):
            if key not in value:
                errors.append("%s: missing required key %r" % (path, key))
        extra = schema.get("additionalProperties", True)
        for key, sub in value.items():
            if key in props:
                errors.extend(validate_schema(sub, props[key],
                                              "%s.%s" % (path, key)))
            elif extra is False:
                errors.append("%s: unknown key %r" % (path, key))
            elif isinstance(extra, dict):
                errors.extend(validate_schema(sub, extra,
                                              "%s.%s" % (path, key)))
    if isinstance(value, list) and "items" in schema:
        for i, item in enumerate(value):
            errors.extend(validate_schema(item, schema["items"],
                                          "%s[%d]" % (path, i)))
    return errors


_NUMBER_OR_NULL = {"type": ["number", "null"]}

CLUSTER_REPORT_SCHEMA = {
    "type": "object",
    "required": ["kind", "method", "num_points", "num_clusters",
                 "runtime_ms", "labels_file"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["cluster"]},
        "method": {"enum": ["ipursuit", "dsc", "kflats"]},
        "num_points": {"type": "integer", "minimum": 1},
        "num_clusters": {"type": "integer", "minimum": 1},
        "runtime_ms": {"type": "number", "minimum": 0},
        "labels_file": {"type": "string"},
        "clustering_error": _NUMBER_OR_NULL,
        "matched_permutation": {"type": ["object", "null"],
                                "additionalProperties": {"type": "integer"}},
        "steps": {"type": "array", "items": {"type": "object"}},
        "failed_direction_solves": {"type": ["integer", "null"]},
    },
}

BENCH_REPORT_SCHEMA = {
    "type": "object",
    "required": ["kind", "suite", "seed", "trials_requested", "records",
                 "aggregates"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["bench"]},
        "suite": {"type": "string"},
        "seed": {"type": "integer"},
        "trials_requested": {"type": "integer", "minimum": 1},
        "records": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["cell", "trial", "seed", "runtime_ms"],
                "additionalProperties": False,
                "properties": {
                    "cell": {"type": "object"},
                    "trial": {"type": "integer", "minimum": 0},
                    "seed": {"type": "integer"},
                    "clustering_error": _NUMBER_OR_NULL,
                    "success": {"type": ["boolean", "null"]},
                    "runtime_ms": {"type": "number", "minimum": 0},
                    "steps": {"type": ["integer", "null"]},
                    "error": {"type": ["string", "null"]},
                },
            },
        },
        "aggregates": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["cell", "trials"],
                "additionalProperties": False,
                "properties": {
                    "cell": {"type": "object"},
                    "trials": {"type": "integer", "minimum": 0},
                    "mean_ce": _NUMBER_OR_NULL,
                    "median_ce": _NUMBER_OR_NULL,
                    "success_rate": _NUMBER_OR_NULL,
                    "mean_runtime_ms": _NUMBER_OR_NULL,
                    "failures": {"type": "integer", "minimum": 0},
                },
            },
        },
    },
}

DIAG_REPORT_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["diag"]},
        "num_points": {"type": "integer", "minimum": 1},
        "ambient_dim": {"type": "integer", "minimum": 1},
        "rank": {"type": "integer", "minimum": 0},
        "permeance_estimate": _NUMBER_OR_NULL,
        "permeance_certified": _NUMBER_OR_NULL,
        "q_column": {"type": ["integer", "null"]},
        "theorem": {
            "type": ["object", "null"],
            "required": ["lhs1", "rhs1", "lhs2", "rhs2",
                         "satisfied1", "satisfied2", "satisfied"],
            "additionalProperties": True,
            "properties": {
                "lhs1": _NUMBER_OR_NULL,
                "rhs1": _NUMBER_OR_NULL,
                "lhs2": _NUMBER_OR_NULL,
                "rhs2": _NUMBER_OR_NULL,
                "satisfied1": {"type": "boolean"},
                "satisfied2": {"type": "boolean"},
                "satisfied": {"type": "boolean"},
            },
        },
        "coherency": _NUMBER_OR_NULL,
    },
}
