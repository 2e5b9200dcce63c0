"""File formats: problem JSON, SDPA ingestion, trace CSV, solution JSON.

The problem format is a small versioned JSON document designed to be
diffable and to round-trip every float exactly (Python's shortest-repr
serialization preserves all 17 significant digits).  Triplet indices are
1-based on disk, matching common sparse interchange conventions.
"""

from __future__ import annotations

import json
import math
from contextlib import contextmanager
from typing import Optional

import numpy as np

from .cones import NonnegL1, PsdTrace, SocBound
from .model import Certificate, ConicProblem, LinearMap

__all__ = [
    "ProblemFormatError",
    "ProblemVersionError",
    "ProblemDimensionError",
    "read_problem",
    "write_problem",
    "read_sdpa",
    "trace_writer",
    "read_trace",
    "TRACE_HEADER",
    "write_solution",
    "read_solution",
]

FORMAT_VERSION = "1"
TRACE_HEADER = "k,step,g_y,g_z,gk_z,affine,cost_gap,dual_gap,wall_ms"

_CONE_TAGS = {"nonneg_l1": NonnegL1, "soc": SocBound, "psd": PsdTrace}
_CONE_NAMES = {NonnegL1: "nonneg_l1", SocBound: "soc", PsdTrace: "psd"}


class ProblemFormatError(ValueError):
    """Malformed or schema-violating problem file."""


class ProblemVersionError(ProblemFormatError):
    """Unsupported format_version."""


class ProblemDimensionError(ProblemFormatError):
    """Internally inconsistent dimensions."""


# ---------------------------------------------------------------------------
# JSON problem files
# ---------------------------------------------------------------------------

def _require_keys(obj: dict, required: set, optional: set, where: str):
    keys = set(obj)
    missing = required - keys
    unknown = keys - required - optional
    if missing:
        raise ProblemFormatError(f"{where}: missing fields {sorted(missing)}")
    if unknown:
        raise ProblemFormatError(f"{where}: unknown fields {sorted(unknown)}")


def _as_float_array(value, where: str) -> np.ndarray:
    if not isinstance(value, list):
        raise ProblemFormatError(f"{where}: expected a list of numbers")
    try:
        arr = np.array([float(v) for v in value], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"{where}: non-numeric entry") from exc
    if arr.size and not np.all(np.isfinite(arr)):
        raise ProblemFormatError(f"{where}: non-finite entry")
    return arr


def _finite(x: float, where: str) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ProblemFormatError(f"{where}: non-finite value")
    return x


def _cone_from_json(obj) -> object:
    if not isinstance(obj, dict):
        raise ProblemFormatError("cone: expected an object")
    _require_keys(obj, {"type", "n", "bound"}, set(), "cone")
    tag = obj["type"]
    if tag not in _CONE_TAGS:
        raise ProblemFormatError(f"cone: unknown type {tag!r}")
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n <= 0:
        raise ProblemFormatError("cone: n must be a positive integer")
    bound = _finite(obj["bound"], "cone.bound")
    if bound <= 0:
        raise ProblemFormatError("cone: bound must be positive")
    return _CONE_TAGS[tag](n=n, bound=bound)


def read_problem(path: str) -> ConicProblem:
    """Parse and validate a JSON problem file."""
    try:
        with open(path) as fh:
            doc = json.load(fh, parse_constant=lambda s: math.nan)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ProblemFormatError(f"{path}: top level must be an object")
    _require_keys(doc, {"format_version", "cone", "c", "b", "A"},
                  {"certificate"}, "problem")
    if doc["format_version"] != FORMAT_VERSION:
        raise ProblemVersionError(
            f"unsupported format_version {doc['format_version']!r} "
            f"(this reader handles {FORMAT_VERSION!r})")

    cone = _cone_from_json(doc["cone"])
    c = _as_float_array(doc["c"], "c")
    b = _as_float_array(doc["b"], "b")

    amat = doc["A"]
    if not isinstance(amat, dict):
        raise ProblemFormatError("A: expected an object")
    _require_keys(amat, {"rows", "cols", "entries"}, set(), "A")
    rows, cols = amat["rows"], amat["cols"]
    for label, v in (("rows", rows), ("cols", cols)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise ProblemFormatError(f"A.{label} must be a nonnegative integer")
    if not isinstance(amat["entries"], list):
        raise ProblemFormatError("A.entries: expected a list")
    triplets = []
    for idx, ent in enumerate(amat["entries"]):
        if not isinstance(ent, list) or len(ent) != 3:
            raise ProblemFormatError(f"A.entries[{idx}]: expected [row, col, value]")
        r, cc, v = ent
        if not isinstance(r, int) or not isinstance(cc, int):
            raise ProblemFormatError(f"A.entries[{idx}]: indices must be integers")
        if not (1 <= r <= rows and 1 <= cc <= cols):
            raise ProblemDimensionError(
                f"A.entries[{idx}]: index ({r}, {cc}) outside 1..{rows} x 1..{cols}")
        triplets.append((r - 1, cc - 1, _finite(v, f"A.entries[{idx}]")))

    if cone.dim != c.size or cone.dim != cols:
        raise ProblemDimensionError(
            f"cone dimension {cone.dim} != len(c) = {c.size} or A.cols = {cols}")
    if b.size != rows:
        raise ProblemDimensionError(f"len(b) = {b.size} != A.rows = {rows}")

    cert = None
    if "certificate" in doc:
        cobj = doc["certificate"]
        if not isinstance(cobj, dict):
            raise ProblemFormatError("certificate: expected an object")
        _require_keys(cobj, {"p_star"}, {"x_star", "y_star", "g_star"},
                      "certificate")
        x_star = y_star = g_star = None
        if "x_star" in cobj:
            x_star = _as_float_array(cobj["x_star"], "certificate.x_star")
            if x_star.size != c.size:
                raise ProblemDimensionError("certificate.x_star has wrong length")
        if "y_star" in cobj:
            y_star = _as_float_array(cobj["y_star"], "certificate.y_star")
            if y_star.size != b.size:
                raise ProblemDimensionError("certificate.y_star has wrong length")
        if "g_star" in cobj:
            g_star = _finite(cobj["g_star"], "certificate.g_star")
        cert = Certificate(p_star=_finite(cobj["p_star"], "certificate.p_star"),
                           x_star=x_star, y_star=y_star, g_star=g_star)

    return ConicProblem(c=c, b=b, A=LinearMap(rows, cols, triplets),
                        cone=cone, certificate=cert)


def write_problem(prob: ConicProblem, path: str) -> None:
    """Serialize a problem (and certificate, if any) to JSON."""
    cone_name = _CONE_NAMES.get(type(prob.cone))
    if cone_name is None:
        raise ProblemFormatError(
            f"cannot serialize cone of type {type(prob.cone).__name__}")
    doc = {
        "format_version": FORMAT_VERSION,
        "cone": {"type": cone_name, "n": int(prob.cone.n),
                 "bound": float(prob.cone.bound)},
        "c": [float(v) for v in prob.c],
        "b": [float(v) for v in prob.b],
        "A": {
            "rows": prob.A.rows,
            "cols": prob.A.cols,
            "entries": [[int(r) + 1, int(c) + 1, float(v)]
                        for r, c, v in prob.A.triplets()],
        },
    }
    cert = prob.certificate
    if cert is not None:
        cobj = {"p_star": float(cert.p_star)}
        if cert.x_star is not None:
            cobj["x_star"] = [float(v) for v in cert.x_star]
        if cert.y_star is not None:
            cobj["y_star"] = [float(v) for v in cert.y_star]
        if cert.g_star is not None:
            cobj["g_star"] = float(cert.g_star)
        doc["certificate"] = cobj
    text = json.dumps(doc, indent=1, allow_nan=False)
    with open(path, "w") as fh:
        fh.write(text)
        fh.write("\n")


# ---------------------------------------------------------------------------
# SDPA sparse ingestion
# ---------------------------------------------------------------------------

def _sdpa_tokens(line: str):
    for ch in "{}(),;":
        line = line.replace(ch, " ")
    return line.split()


def read_sdpa(path: str, trace_bound: float) -> ConicProblem:
    """Read a single-block SDPA sparse (.dat-s) file.

    The file's LP-style data (F_0, F_i, cost vector) maps to this
    package's conic form as C = -F_0, A_i = F_i, b = the cost vector.
    The format carries no compactness information, so the trace bound
    must be supplied by the caller.
    """
    if trace_bound <= 0:
        raise ProblemFormatError("trace bound must be positive")
    # flat token stream: line layout in .dat-s files is not normative
    tokens: list = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("*") or line.startswith('"'):
                continue
            tokens.extend(_sdpa_tokens(line))
    try:
        m = int(tokens[0])
        nblocks = int(tokens[1])
        block_sizes = [int(t) for t in tokens[2:2 + nblocks]]
        pos = 2 + nblocks
        cost = [float(t) for t in tokens[pos:pos + m]]
        pos += m
        rest = tokens[pos:]
        if len(rest) % 5 != 0:
            raise ValueError("entry section is not a multiple of five tokens")
        entries = [(int(rest[i]), int(rest[i + 1]), int(rest[i + 2]),
                    int(rest[i + 3]), float(rest[i + 4]))
                   for i in range(0, len(rest), 5)]
    except (IndexError, ValueError) as exc:
        raise ProblemFormatError(f"{path}: malformed SDPA file ({exc})") from exc
    if nblocks != 1 or len(block_sizes) != 1:
        raise ProblemFormatError(
            f"{path}: only single-block SDPA files are supported "
            f"(file declares {nblocks} blocks)")
    n = block_sizes[0]
    if n <= 0:
        raise ProblemFormatError(
            f"{path}: block size {n} denotes a diagonal block; "
            "a semidefinite block is required")
    if len(cost) != m:
        raise ProblemFormatError(
            f"{path}: cost vector has {len(cost)} entries, expected {m}")

    d = n * (n + 1) // 2
    c_vec = np.zeros(d)
    triplets = []
    sqrt2 = math.sqrt(2.0)
    for matno, blkno, i, j, val in entries:
        if blkno != 1:
            raise ProblemFormatError(f"{path}: entry references block {blkno}")
        if not (0 <= matno <= m):
            raise ProblemFormatError(f"{path}: matrix index {matno} out of range")
        if not (1 <= i <= n and 1 <= j <= n):
            raise ProblemFormatError(f"{path}: entry index ({i}, {j}) out of range")
        lo, hi = (i - 1, j - 1) if i <= j else (j - 1, i - 1)
        col = hi * (hi + 1) // 2 + lo
        sval = val if lo == hi else sqrt2 * val
        if matno == 0:
            c_vec[col] -= sval  # C = -F_0
        else:
            triplets.append((matno - 1, col, sval))

    return ConicProblem(c=c_vec, b=np.asarray(cost, dtype=float),
                        A=LinearMap(m, d, triplets),
                        cone=PsdTrace(n=n, bound=float(trace_bound)))


# ---------------------------------------------------------------------------
# trace CSV
# ---------------------------------------------------------------------------

def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


@contextmanager
def trace_writer(path: str):
    """Context manager yielding a per-iteration record writer."""
    with open(path, "w") as fh:
        fh.write(TRACE_HEADER + "\n")

        def emit(rec):
            step = "D" if rec.step_type == "descent" else "N"
            fh.write(",".join([
                str(rec.k), step, _fmt(rec.g_y), _fmt(rec.g_z),
                _fmt(rec.gk_z), _fmt(rec.affine), _fmt(rec.cost_gap),
                _fmt(rec.dual_gap), _fmt(rec.wall_time * 1e3),
            ]) + "\n")

        yield emit


def read_trace(path: str):
    """Parse a trace CSV into a list of dicts (None for empty fields)."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != TRACE_HEADER:
            raise ProblemFormatError(f"{path}: unexpected trace header {header!r}")
        names = header.split(",")
        out = []
        for lineno, raw in enumerate(fh, start=2):
            parts = raw.rstrip("\n").split(",")
            if len(parts) != len(names):
                raise ProblemFormatError(f"{path}:{lineno}: malformed row")
            row = dict(zip(names, parts))
            rec = {"k": int(row["k"]), "step": row["step"]}
            for key in ("g_y", "g_z", "gk_z", "affine", "cost_gap",
                        "dual_gap", "wall_ms"):
                rec[key] = float(row[key]) if row[key] != "" else None
            out.append(rec)
    return out


# ---------------------------------------------------------------------------
# solution files
# ---------------------------------------------------------------------------

def write_solution(result, path: str) -> None:
    """Persist a SolveResult's final iterates and status to JSON."""
    last = result.trace[-1] if result.trace else None
    doc = {
        "format_version": FORMAT_VERSION,
        "status": result.status,
        "iterations": len(result.trace),
        "x": [float(v) for v in result.x],
        "y": [float(v) for v in result.y],
        "x_average": [float(v) for v in result.x_average],
        "g_y": float(result.state.g_y),
        "affine": None if last is None else float(last.affine),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, allow_nan=False)
        fh.write("\n")


def read_solution(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"{path}: not valid JSON ({exc})") from exc
    _require_keys(doc, {"format_version", "status", "iterations", "x", "y",
                        "x_average", "g_y", "affine"}, set(), "solution")
    if doc["format_version"] != FORMAT_VERSION:
        raise ProblemVersionError(
            f"unsupported format_version {doc['format_version']!r}")
    doc["x"] = _as_float_array(doc["x"], "x")
    doc["y"] = _as_float_array(doc["y"], "y")
    doc["x_average"] = _as_float_array(doc["x_average"], "x_average")
    return doc
