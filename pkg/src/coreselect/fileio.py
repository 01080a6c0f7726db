"""On-disk formats: binary embeddings, CSV tables, JSON results.

Embedding files ("EMB1"):
    magic   4 bytes  b"EMB1"
    version u32 LE   currently 1
    n       u64 LE   number of rows
    dim     u64 LE   row width
    payload n*dim float32 LE, row-major

Score tables are UTF-8 CSV ``index,score`` (header optional); the
indices must cover 0..n-1 exactly once, in any order.  Similarity
tables are ``row,col,weight`` with symmetric closure applied on load
(either direction may be stored; duplicates keep the max weight;
diagonal entries are dropped).  Weights outside [-1, 1] are rejected --
negative weights only appear in graphs built without clamping.

Selection and report files are JSON validated against the schemas
below.  All writes go through a temp file plus atomic rename, so a
crashed run never leaves a half-written artifact.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from datetime import datetime, timezone

import numpy as np
import jsonschema

from .core import EmbeddingMatrix, ScoreVector, SelectionResult, SparseSimilarity, csr_from_coo
from .errors import FormatError, InputError
from .scoring import load_scores

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "SELECTION_SCHEMA",
    "REPORT_SCHEMA",
    "write_embeddings",
    "read_embeddings",
    "write_scores_csv",
    "read_scores_csv",
    "write_similarity_csv",
    "read_similarity_csv",
    "write_selection",
    "read_selection",
    "write_report",
    "read_report",
    "atomic_write_bytes",
    "atomic_write_text",
]

MAGIC = b"EMB1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")

SELECTION_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["selected", "objective", "params", "trace", "tool_version"],
    "properties": {
        "selected": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "objective": {"type": "number"},
        "params": {"type": "object"},
        "trace": {"type": "array", "items": {"type": "number"}},
        "tool_version": {"type": "string"},
        "created_at": {"type": "string"},
    },
    "additionalProperties": False,
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": [
        "objective",
        "coverage_mean",
        "coverage_max",
        "score_quantiles",
        "score_histogram",
    ],
    "properties": {
        "objective": {"type": "number"},
        "coverage_mean": {"type": "number"},
        "coverage_max": {"type": "number"},
        "score_quantiles": {
            "type": "object",
            "required": ["min", "q25", "median", "q75", "max"],
            "additionalProperties": {"type": "number"},
        },
        "score_histogram": {
            "type": "object",
            "required": ["edges", "counts"],
            "properties": {
                "edges": {"type": "array", "items": {"type": "number"}},
                "counts": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            },
        },
        "params": {"type": "object"},
        "tool_version": {"type": "string"},
        "created_at": {"type": "string"},
    },
    "additionalProperties": False,
}


def atomic_write_bytes(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_embeddings(path: str, embeddings: EmbeddingMatrix) -> None:
    """Serialize to the EMB1 binary layout (float32 payload)."""
    payload = np.ascontiguousarray(embeddings.data, dtype="<f4")
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, embeddings.n, embeddings.dim)
    atomic_write_bytes(path, header + payload.tobytes())


def read_embeddings(path: str) -> EmbeddingMatrix:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, n, dim = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: not an embedding file (bad magic {magic!r})")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    expected = _HEADER.size + n * dim * 4
    if len(blob) != expected:
        raise FormatError(f"{path}: payload is {len(blob) - _HEADER.size} bytes, expected {n * dim * 4}")
    data = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(n, dim)
    try:
        return EmbeddingMatrix(np.ascontiguousarray(data.astype(np.float32)), normalized=False)
    except InputError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_scores_csv(path: str, scores: ScoreVector) -> None:
    lines = ["index,score"]
    lines.extend(f"{i},{v!r}" for i, v in enumerate(scores.values.tolist()))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _parse_table(path: str, n_fields: int) -> list[tuple[int, list[str]]]:
    rows: list[tuple[int, list[str]]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split(",")
            if lineno == 1:
                try:
                    int(parts[0])
                except ValueError:
                    continue  # header row
            if len(parts) != n_fields:
                raise FormatError(f"{path}:{lineno}: expected {n_fields} comma-separated fields")
            rows.append((lineno, parts))
    return rows


def read_scores_csv(path: str) -> ScoreVector:
    """Parse an ``index,score`` table into a raw ScoreVector."""
    entries = []
    for lineno, parts in _parse_table(path, 2):
        try:
            idx = int(parts[0])
            val = float(parts[1])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: cannot parse {','.join(parts)!r}") from None
        entries.append((idx, val))
    try:
        return load_scores(entries)
    except InputError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_similarity_csv(path: str, similarity: SparseSimilarity) -> None:
    rows = np.repeat(
        np.arange(similarity.n, dtype=np.int64), np.diff(similarity.row_offsets)
    )
    lines = ["row,col,weight"]
    lines.extend(
        f"{r},{c},{w!r}"
        for r, c, w in zip(rows.tolist(), similarity.col_indices.tolist(), similarity.weights.tolist())
    )
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_similarity_csv(path: str, n: int) -> SparseSimilarity:
    """Parse ``row,col,weight`` triples and apply symmetric closure."""
    rs, cs, ws = [], [], []
    for lineno, parts in _parse_table(path, 3):
        try:
            r, c, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: cannot parse {','.join(parts)!r}") from None
        if not 0 <= r < n or not 0 <= c < n:
            raise FormatError(f"{path}:{lineno}: index outside 0..{n - 1}")
        if not np.isfinite(w):
            raise FormatError(f"{path}:{lineno}: weight {parts[2]!r} is not finite")
        if not -1.0 <= w <= 1.0:
            raise FormatError(f"{path}:{lineno}: weight {w!r} outside [-1, 1]")
        rs.append(r)
        cs.append(c)
        ws.append(w)
    rows = np.asarray(rs + cs, dtype=np.int64)
    cols = np.asarray(cs + rs, dtype=np.int64)
    weights = np.asarray(ws + ws, dtype=np.float64)
    off, cidx, wout = csr_from_coo(n, rows, cols, weights)
    in_range = not ws or (min(ws) >= 0.0)
    try:
        return SparseSimilarity(n, off, cidx, wout, check=in_range)
    except InputError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def _timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def selection_to_dict(
    result: SelectionResult, params: dict, tool_version: str, timestamp: bool = True
) -> dict:
    doc = {
        "selected": [int(i) for i in result.selected.tolist()],
        "objective": float(result.objective),
        "params": params,
        "trace": [float(t) for t in result.trace.tolist()],
        "tool_version": tool_version,
    }
    if timestamp:
        doc["created_at"] = _timestamp()
    return doc


def write_selection(
    path: str, result: SelectionResult, params: dict, tool_version: str
) -> None:
    doc = selection_to_dict(result, params, tool_version)
    jsonschema.validate(doc, SELECTION_SCHEMA)
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_selection(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    try:
        jsonschema.validate(doc, SELECTION_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise FormatError(f"{path}: {exc.message}") from exc
    sel = doc["selected"]
    if any(b <= a for a, b in zip(sel, sel[1:])):
        raise FormatError(f"{path}: selected indices must be strictly increasing")
    return doc


def write_report(path: str, doc: dict) -> None:
    jsonschema.validate(doc, REPORT_SCHEMA)
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_report(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    try:
        jsonschema.validate(doc, REPORT_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise FormatError(f"{path}: {exc.message}") from exc
    return doc
