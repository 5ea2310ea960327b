"""Algebra files, trace CSVs and JSON run reports.

Algebra files are JSON::

    {"dim": 3, "name": "h3",
     "brackets": [{"i": 1, "j": 2, "k": 3, "re": 1.0, "im": 0.0}],
     "metric": [[[1, 0], [0, 0], [0, 0]], ...]}

Indices are 1-based with ``i < j``.  ``metric`` is optional, row-major
``[re, im]`` pairs, either nested ``n x n`` or flat with ``n*n`` entries.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .algebra import AlgebraDescriptor, BracketTensor, validate
from .conventions import CONVENTION_VERSION
from .errors import BadMetric, HCFError, ParseError

TRACE_COLUMNS = ["t", "norm_sq", "F", "trK", "residual"]


class IoError(HCFError):
    exit_code = 2


# ------------------------------------------------------------ algebra files


@dataclass
class AlgebraFile:
    descriptor: AlgebraDescriptor
    metric: np.ndarray | None = None
    name: str | None = None


def _number(entry, key, where):
    if key not in entry:
        raise ParseError(f"{where}: missing field {key!r}")
    v = entry[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{where}: field {key!r} must be a number, got {v!r}")
    if not math.isfinite(v):
        raise ParseError(f"{where}: field {key!r} is not finite")
    return v


def _index(entry, key, dim, where):
    v = entry.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{where}: field {key!r} must be an integer, got {v!r}")
    if not 1 <= v <= dim:
        raise ParseError(f"{where}: field {key!r} = {v} out of range 1..{dim}")
    return v - 1


def _parse_metric(raw, dim):
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError):
        raise ParseError("metric: entries must be [re, im] number pairs") from None
    if arr.shape == (dim * dim, 2):
        arr = arr.reshape(dim, dim, 2)
    if arr.shape != (dim, dim, 2):
        raise ParseError(f"metric: expected {dim}x{dim} [re, im] pairs, got shape {arr.shape}")
    h = arr[..., 0] + 1j * arr[..., 1]
    if not np.all(np.isfinite(h)):
        raise BadMetric("metric has non-finite entries")
    if np.abs(h - h.conj().T).max() > 1e-12 * max(1.0, np.abs(h).max()):
        raise BadMetric("metric is not Hermitian")
    w = np.linalg.eigvalsh(h)
    if w[-1] <= 0 or w[0] <= 1e-12 * w[-1]:
        raise BadMetric(f"metric is not positive definite (smallest eigenvalue {w[0]:.3e})")
    return h


def loads_algebra(text: str) -> AlgebraFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    dim = doc.get("dim")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ParseError(f"field 'dim' must be a positive integer, got {dim!r}")
    brackets = doc.get("brackets", [])
    if not isinstance(brackets, list):
        raise ParseError("field 'brackets' must be a list")
    entries = {}
    for n, e in enumerate(brackets):
        where = f"brackets[{n}]"
        if not isinstance(e, dict):
            raise ParseError(f"{where}: must be an object")
        i, j, k = (_index(e, key, dim, where) for key in ("i", "j", "k"))
        if i >= j:
            raise ParseError(f"{where}: need i < j, got i={i + 1}, j={j + 1}")
        if (i, j, k) in entries:
            raise ParseError(f"{where}: duplicate entry ({i + 1},{j + 1},{k + 1})")
        entries[(i, j, k)] = complex(_number(e, "re", where), _number(e, "im", where) if "im" in e else 0.0)
    name = doc.get("name")
    if name is not None and not isinstance(name, str):
        raise ParseError("field 'name' must be a string")
    desc = validate(BracketTensor.from_entries(dim, entries), name=name)
    metric = _parse_metric(doc["metric"], dim) if doc.get("metric") is not None else None
    return AlgebraFile(desc, metric, name)


def parse_algebra(path) -> AlgebraFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror}") from None
    return loads_algebra(text)


def algebra_to_dict(mu, metric=None, name=None) -> dict:
    if isinstance(mu, AlgebraDescriptor):
        name = name if name is not None else mu.name
        mu = mu.bracket
    mu = mu if isinstance(mu, BracketTensor) else BracketTensor(mu)
    doc = {"dim": mu.dim}
    if name is not None:
        doc["name"] = name
    doc["brackets"] = [
        {"i": i + 1, "j": j + 1, "k": k + 1, "re": v.real, "im": v.imag} for i, j, k, v in mu.entries()
    ]
    if metric is not None:
        h = np.asarray(metric, dtype=np.complex128)
        doc["metric"] = [[[z.real, z.imag] for z in row] for row in h.tolist()]
    return doc


def dumps_algebra(mu, metric=None, name=None) -> str:
    # json writes floats with repr, so the round trip is exact
    return json.dumps(algebra_to_dict(mu, metric, name), indent=1) + "\n"


# ------------------------------------------------------------------ traces


def trace_header(dim: int) -> list[str]:
    return TRACE_COLUMNS + [f"eig_{i}" for i in range(1, dim + 1)]


def trace_rows(trace):
    for s in trace.samples:
        d = s.diagnostics
        yield [s.t, d.norm_sq, d.F, d.trK, d.residual, *(float(x) for x in d.spectrum)]


def trace_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trace_header(trace.dim))
    for row in trace_rows(trace):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def read_trace_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise IoError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(len(body), len(header))
    return header, data


def trace_to_dict(trace) -> dict:
    return {
        "summary": trace.summary(),
        "columns": trace_header(trace.dim),
        "rows": [[float(x) for x in row] for row in trace_rows(trace)],
    }


# ----------------------------------------------------------------- reports


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    return obj


@dataclass
class RunReport:
    command: str
    input: dict
    payload: dict
    termination: str = "ok"
    wall_time: float = 0.0
    seed: int | None = None
    convention_version: str = CONVENTION_VERSION
    backend: str = ""
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return to_jsonable(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))


def ensure_dir(path) -> Path:
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {p}: {exc.strerror}") from None
    if not os.access(p, os.W_OK):
        raise IoError(f"output directory {p} is not writable")
    return p


def write_text(path, text: str) -> Path:
    p = Path(path)
    try:
        p.write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write {p}: {exc.strerror}") from None
    return p


__all__ = [
    "AlgebraFile",
    "IoError",
    "RunReport",
    "algebra_to_dict",
    "dumps_algebra",
    "loads_algebra",
    "parse_algebra",
    "read_trace_csv",
    "trace_csv",
    "trace_header",
    "trace_to_dict",
    "write_text",
]
