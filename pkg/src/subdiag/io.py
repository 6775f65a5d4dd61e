"""JSON formats for matrices, algebra descriptors and subspaces.

Matrix: {"n": int, "entries": [[[re, im], ...], ...]} row-major.
Shorthands accepted wherever a matrix is read: ``diag:1,4`` and ``id:3``.
"""
import hashlib
import json

import numpy as np

from .algebra import BlockPartition, SubAlg


class InputFormatError(ValueError):
    """Malformed input; ``location`` names the file and field at fault."""

    def __init__(self, message, location=""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


def matrix_to_json(x):
    x = np.asarray(x, dtype=np.complex128)
    return {"n": int(x.shape[0]),
            "entries": [[[float(v.real), float(v.imag)] for v in row] for row in x]}


def matrix_from_json(obj, location="matrix"):
    if not isinstance(obj, dict) or "entries" not in obj:
        raise InputFormatError("expected an object with 'entries'", location)
    rows = obj["entries"]
    n = obj.get("n", len(rows))
    if not isinstance(rows, list) or len(rows) != n or n < 1:
        raise InputFormatError(f"'entries' must hold n={n} rows", location)
    out = np.zeros((n, n), dtype=np.complex128)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise InputFormatError(f"row {i} must have {n} entries", f"{location}.entries[{i}]")
        for j, v in enumerate(row):
            where = f"{location}.entries[{i}][{j}]"
            if isinstance(v, (int, float)):
                out[i, j] = v
            elif isinstance(v, list) and len(v) == 2 and all(isinstance(c, (int, float)) for c in v):
                out[i, j] = complex(v[0], v[1])
            else:
                raise InputFormatError("entry must be [re, im]", where)
    if not np.all(np.isfinite(out)):
        raise InputFormatError("non-finite entry", location)
    return out


def parse_shorthand(text):
    kind, _, arg = text.partition(":")
    try:
        if kind == "diag":
            return np.diag([complex(v) for v in arg.split(",")]).astype(np.complex128)
        if kind == "id":
            return np.eye(int(arg), dtype=np.complex128)
    except ValueError as exc:
        raise InputFormatError(str(exc), text) from exc
    raise InputFormatError("unknown shorthand (use diag:a,b,... or id:n)", text)


def _load_json(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputFormatError(str(exc), str(path)) from exc
    try:
        return json.loads(raw), raw
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"invalid JSON at line {exc.lineno} column {exc.colno}", str(path)) from exc


def load_matrix(source):
    """Read a matrix from a file path or a shorthand; returns (matrix, sha256)."""
    if ":" in source and not source.endswith(".json"):
        m = parse_shorthand(source)
        return m, hashlib.sha256(source.encode()).hexdigest()
    obj, raw = _load_json(source)
    return matrix_from_json(obj, str(source)), hashlib.sha256(raw).hexdigest()


def algebra_from_json(obj, location="algebra"):
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind == "block_upper":
        try:
            part = BlockPartition(tuple(obj["partition"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"bad partition: {exc}", location) from exc
        if "n" in obj and obj["n"] != part.n:
            raise InputFormatError(f"partition sums to {part.n}, not n={obj['n']}", location)
        return SubAlg.block_upper(part)
    if kind == "explicit":
        basis = obj.get("basis")
        if not isinstance(basis, list) or not basis:
            raise InputFormatError("'basis' must be a non-empty list", location)
        mats = [matrix_from_json(m, f"{location}.basis[{i}]") for i, m in enumerate(basis)]
        return SubAlg.explicit(mats)
    raise InputFormatError("'kind' must be 'block_upper' or 'explicit'", location)


def load_algebra(path):
    obj, raw = _load_json(path)
    return algebra_from_json(obj, str(path)), hashlib.sha256(raw).hexdigest()


def subspace_to_json(K):
    return {"n": K.n, "basis": [matrix_to_json(b) for b in K.basis]}


def subspace_from_json(obj, location="subspace"):
    from .beurling import Subspace

    if not isinstance(obj, dict) or not isinstance(obj.get("basis"), list):
        raise InputFormatError("expected an object with 'basis'", location)
    mats = [matrix_from_json(m, f"{location}.basis[{i}]") for i, m in enumerate(obj["basis"])]
    n = obj.get("n", mats[0].shape[0] if mats else None)
    if n is None:
        raise InputFormatError("empty subspace needs 'n'", location)
    if any(m.shape[0] != n for m in mats):
        raise InputFormatError(f"basis matrices must be {n}x{n}", location)
    return Subspace.span(mats, n=n)


def load_subspace(path):
    obj, raw = _load_json(path)
    return subspace_from_json(obj, str(path)), hashlib.sha256(raw).hexdigest()
