"""CSV ingestion for cross-section and three-period panel data."""
from __future__ import annotations

import csv
import hashlib
import math
from pathlib import Path

import numpy as np

from .model import Dataset
from .multiperiod import PanelDataset3


class DataError(ValueError):
    """Malformed input file; the message names the offending row."""


def _read_rows(path) -> tuple[list[str], list[tuple[int, dict]]]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#") and ln.strip()]
    reader = csv.DictReader(lines)
    header = [h.strip() for h in (reader.fieldnames or [])]
    if not header:
        raise DataError(f"{path}: missing header row")
    reader.fieldnames = header
    rows = [(k + 1, {key: (val or "").strip() for key, val in row.items()}) for k, row in enumerate(reader)]
    if not rows:
        raise DataError(f"{path}: no data rows")
    return header, rows


def _number(text: str, row: int, col: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"row {row}: column {col!r} is not a number ({text!r})") from None
    if math.isnan(v):
        raise DataError(f"row {row}: column {col!r} is NaN")
    if not math.isfinite(v):
        raise DataError(f"row {row}: column {col!r} is not finite")
    return v


def _indicator(text: str, row: int, col: str) -> int:
    v = _number(text, row, col)
    if v not in (0.0, 1.0):
        raise DataError(f"row {row}: column {col!r} must be 0 or 1, got {text!r}")
    return int(v)


def _prefixed(header, prefix):
    return [h for h in header if h.startswith(prefix)]


def _block(row: int, rec: dict, cols, present: bool, what: str) -> list[float]:
    """Values of a possibly-missing block; empty exactly when not present."""
    if present:
        empty = [c for c in cols if rec[c] == ""]
        if empty:
            raise DataError(f"row {row}: {what} column {empty[0]!r} is empty but the row is observed")
        return [_number(rec[c], row, c) for c in cols]
    filled = [c for c in cols if rec[c] != ""]
    if filled:
        raise DataError(f"row {row}: {what} column {filled[0]!r} must be empty when not observed")
    return [0.0] * len(cols)


def load_dataset(path, z1_columns=None, z2_columns=None) -> Dataset:
    """Read a cross-section: column ``s`` plus z1 and z2 blocks.

    Column names come from the model (``z1_columns``, ``z2_columns``) or
    default to the ``z1_*`` / ``z2_*`` prefixes. z2 cells must be empty
    exactly on rows with ``s = 0``.
    """
    header, rows = _read_rows(path)
    if "s2" in header and "s3" in header:
        raise DataError(f"{path}: looks like a panel file (s2, s3); use load_panel")
    if "s" not in header:
        raise DataError(f"{path}: missing selection column 's'")
    z1c = list(z1_columns) if z1_columns else _prefixed(header, "z1_")
    z2c = list(z2_columns) if z2_columns else _prefixed(header, "z2_")
    missing = [c for c in z1c + z2c if c not in header]
    if missing:
        raise DataError(f"{path}: missing columns {missing}")
    if not z2c:
        raise DataError(f"{path}: no z2 columns")
    s, z1, z2 = [], [], []
    for row, rec in rows:
        si = _indicator(rec["s"], row, "s")
        s.append(si)
        z1.append(_block(row, rec, z1c, True, "z1"))
        z2.append(_block(row, rec, z2c, si == 1, "z2"))
    n = len(s)
    return Dataset(np.array(s), np.array(z1, float).reshape(n, len(z1c)), np.array(z2, float).reshape(n, len(z2c)))


def load_panel(path) -> PanelDataset3:
    """Read a three-period panel: s2, s3 and z1_*, z2_*, z3_* blocks."""
    header, rows = _read_rows(path)
    for col in ("s2", "s3"):
        if col not in header:
            raise DataError(f"{path}: missing selection column {col!r}")
    z1c, z2c, z3c = (_prefixed(header, p) for p in ("z1_", "z2_", "z3_"))
    if not z2c or not z3c:
        raise DataError(f"{path}: panel needs z2_* and z3_* columns")
    s2, s3, z1, z2, z3 = [], [], [], [], []
    for row, rec in rows:
        a = _indicator(rec["s2"], row, "s2")
        b = _indicator(rec["s3"], row, "s3")
        if b > a:
            raise DataError(f"row {row}: monotone attrition violated (s3 = 1 with s2 = 0)")
        s2.append(a)
        s3.append(b)
        z1.append(_block(row, rec, z1c, True, "z1"))
        z2.append(_block(row, rec, z2c, a == 1, "z2"))
        z3.append(_block(row, rec, z3c, b == 1, "z3"))
    n = len(s2)
    return PanelDataset3(
        np.array(s2), np.array(s3), np.array(z1, float).reshape(n, len(z1c)),
        np.array(z2, float).reshape(n, len(z2c)), np.array(z3, float).reshape(n, len(z3c)),
    )


def is_panel_file(path) -> bool:
    header, _ = _read_rows(path)
    return "s2" in header and "s3" in header


def save_dataset(dataset: Dataset, path, z1_columns=None, z2_columns=None, header_comment=None) -> None:
    """Write a cross-section in the format :func:`load_dataset` reads."""
    z1c = list(z1_columns) if z1_columns else [f"z1_{k + 1}" for k in range(dataset.z1.shape[1])]
    z2c = list(z2_columns) if z2_columns else [f"z2_{k + 1}" for k in range(dataset.z2.shape[1])]
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        w.writerow(["s"] + z1c + z2c)
        for s, a, b in zip(dataset.s, dataset.z1, dataset.z2):
            z2 = [repr(float(v)) for v in b] if s == 1 else [""] * len(z2c)
            w.writerow([int(s)] + [repr(float(v)) for v in a] + z2)


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
