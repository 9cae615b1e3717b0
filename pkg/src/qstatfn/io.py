"""File formats: JSON matrices and CSV tables.

Matrix JSON is ``{"dim": d, "re": [[...]], "im": [[...]]}`` with row-major
nested lists; a missing ``"im"`` means a real matrix. Matrices are written
with full ``repr`` precision so a write/read cycle is bit-exact.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import errors


def fmt(x: float) -> str:
    """Format a float for CSV output: 10 fractional digits, trailing zeros dropped."""
    x = float(x)
    if not math.isfinite(x):
        return repr(x)
    s = f"{x:.10f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def round_sig(x: float, digits: int = 10) -> float:
    """Round to ``digits`` significant digits (used for JSON reports)."""
    x = float(x)
    return float(f"{x:.{digits}g}") if math.isfinite(x) else x


def matrix_to_dict(m) -> dict:
    m = np.asarray(m, dtype=complex)
    out = {"dim": int(m.shape[0]), "re": m.real.tolist()}
    if np.any(m.imag != 0):
        out["im"] = m.imag.tolist()
    return out


def matrix_from_dict(obj) -> np.ndarray:
    if not isinstance(obj, dict) or "re" not in obj:
        raise errors.MalformedInput('matrix JSON must be an object with a "re" field')
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float) if obj.get("im") is not None else np.zeros_like(re)
    except (TypeError, ValueError) as exc:
        raise errors.MalformedInput(f"matrix entries must be real numbers: {exc}") from None
    if re.ndim != 2 or re.shape[0] != re.shape[1] or im.shape != re.shape:
        raise errors.MalformedInput(f"matrix must be square; got re {re.shape}, im {im.shape}")
    dim = obj.get("dim", re.shape[0])
    if dim != re.shape[0]:
        raise errors.MalformedInput(f'"dim" is {dim} but the matrix is {re.shape[0]}x{re.shape[0]}')
    if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
        raise errors.MalformedInput("matrix has non-finite entries")
    return re + 1j * im


def read_matrix(path: str | Path) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise errors.MalformedInput(f"cannot read {path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise errors.MalformedInput(f"{path}: invalid JSON ({exc.msg})") from None
    return matrix_from_dict(obj)


def dumps_matrix(m) -> str:
    return json.dumps(matrix_to_dict(m))


def write_matrix(path: str | Path, m) -> None:
    Path(path).write_text(dumps_matrix(m) + "\n")


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Render rows to CSV, formatting floats with :func:`fmt`."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def read_csv(text: str) -> tuple[list[str], list[list[float]]]:
    """Parse a numeric CSV with a header row."""
    reader = csv.reader(_io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise errors.MalformedInput("empty CSV") from None
    rows = []
    for k, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            rows.append([float(v) for v in row])
        except ValueError:
            raise errors.MalformedInput(f"line {k}: non-numeric field") from None
        if len(row) != len(header):
            raise errors.MalformedInput(f"line {k}: expected {len(header)} fields")
    return header, rows
