"""Plain-text outputs: trajectory tables, sweep matrices, JSON summaries.

All files are UTF-8 and newline-terminated; floats carry 9 significant digits.
Matrix layout: ``# key=value`` header lines, then a row whose first entry is
``nan`` (the corner) followed by the axis2 values, then one row per axis1
value starting with that value.  A 1D sweep has a corner-only first row and a
single data column.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import Trajectory
from .sweep import SweepResult

DIGITS = 9
TRAJECTORY_COLUMNS = (
    "T", "re_a_m", "im_a_m", "re_a_n", "im_a_n", "re_a_f", "im_a_f",
    "pop_m", "pop_n", "pop_f", "W", "sum_total",
)


def fmt(x: float) -> str:
    return f"{x:.{DIGITS}g}"


def round_sig(a, digits: int = DIGITS) -> np.ndarray:
    """Round to ``digits`` significant figures the way the writers do."""
    return np.vectorize(lambda v: float(f"{v:.{digits}g}"), otypes=[float])(np.asarray(a, dtype=float))


def trajectory_rows(traj: Trajectory) -> np.ndarray:
    a = traj.amplitudes
    pops = traj.populations
    return np.column_stack([
        traj.times,
        a[:, 0].real, a[:, 0].imag, a[:, 1].real, a[:, 1].imag, a[:, 2].real, a[:, 2].imag,
        pops[:, 0], pops[:, 1], pops[:, 2], traj.W, traj.sum_total,
    ])


def write_trajectory(traj: Trajectory, path: Path, delimiter: str = ",") -> Path:
    rows = trajectory_rows(traj)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(delimiter.join(TRAJECTORY_COLUMNS) + "\n")
        for row in rows:
            fh.write(delimiter.join(fmt(v) for v in row) + "\n")
    return path


def read_trajectory(path: Path, delimiter: str = ",") -> dict[str, np.ndarray]:
    data = np.loadtxt(path, delimiter=delimiter, skiprows=1, ndmin=2)
    return {name: data[:, k] for k, name in enumerate(TRAJECTORY_COLUMNS)}


def write_matrix(result: SweepResult, observable: str, path: Path, extra: Optional[dict] = None) -> Path:
    values = result.data[observable]
    header = {
        "observable": observable,
        "axis1": result.axis1_path,
        "axis2": result.axis2_path if result.axis2 is not None else "none",
        "rows": len(result.axis1),
        "cols": 1 if result.axis2 is None else len(result.axis2),
        "digits": DIGITS,
    }
    header.update(extra or {})
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in header.items():
            fh.write(f"# {key}={value}\n")
        top = ["nan"] + ([] if result.axis2 is None else [fmt(v) for v in result.axis2])
        fh.write(" ".join(top) + "\n")
        for i, a1 in enumerate(result.axis1):
            cells = [values[i]] if result.axis2 is None else values[i]
            fh.write(" ".join([fmt(a1)] + [fmt(v) for v in cells]) + "\n")
    return path


def read_matrix(path: Path) -> tuple[dict[str, str], np.ndarray, Optional[np.ndarray], np.ndarray]:
    """Parse a matrix file into ``(header, axis1, axis2, cells)``."""
    header: dict[str, str] = {}
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                header[key] = value
            elif line.strip():
                rows.append([float(tok) for tok in line.split()])
    top = rows[0]
    axis2 = np.array(top[1:]) if len(top) > 1 else None
    body = np.array(rows[1:])
    axis1 = body[:, 0]
    cells = body[:, 1:]
    if axis2 is None:
        cells = cells[:, 0]
    return header, axis1, axis2, cells


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def write_json(obj, path: Path) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_clean(obj), fh, indent=2, allow_nan=False)
        fh.write("\n")
    return path
