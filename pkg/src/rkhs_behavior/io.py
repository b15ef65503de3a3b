"""Trajectory CSV files and canonical JSON output.

CSV layout: header ``u0,...,u{m-1},y0,...,y{p-1}``, one row per time step,
LF line endings, values written with 17 significant digits so that a
read-back is bit-exact.
"""
import csv
import json
import math
from typing import Optional

import numpy as np

from .errors import ParseError
from .systems import Trajectory

__all__ = ["write_trajectory", "read_trajectory", "trajectory_header", "canonical", "dumps", "write_json",
           "write_matrix_csv"]


def trajectory_header(m: int, p: int):
    return [f"u{i}" for i in range(m)] + [f"y{i}" for i in range(p)]


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_trajectory(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(traj.m, traj.p))
        for row in np.hstack([traj.u, traj.y]):
            w.writerow([_fmt(v) for v in row])


def _split_header(header, path):
    us = [h for h in header if h.startswith("u")]
    ys = [h for h in header if h.startswith("y")]
    m, p = len(us), len(ys)
    if header != trajectory_header(m, p) or m == 0 or p == 0:
        raise ParseError(f"{path}: bad header {','.join(header)!r}; expected u0..,y0..", row=1)
    return m, p


def read_trajectory(path, allow_empty: bool = False) -> Optional[Trajectory]:
    """Parse a trajectory CSV.

    A header-only file returns ``None`` when ``allow_empty`` is set and
    raises :class:`ParseError` otherwise.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file", row=1)
    m, p = _split_header([h.strip() for h in rows[0]], path)
    data = []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != m + p:
            raise ParseError(f"{path}:{i}: expected {m + p} fields, got {len(row)}", row=i)
        try:
            vals = [float(x) for x in row]
        except ValueError:
            raise ParseError(f"{path}:{i}: non-numeric field", row=i) from None
        if not all(math.isfinite(v) for v in vals):
            raise ParseError(f"{path}:{i}: non-finite value", row=i)
        data.append(vals)
    if not data:
        if allow_empty:
            return None
        raise ParseError(f"{path}: no data rows", row=2)
    arr = np.array(data)
    return Trajectory(arr[:, :m], arr[:, m:])


def canonical(obj):
    """Convert numpy containers and scalars into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    # repr-based float output is the shortest string that round-trips exactly
    return json.dumps(canonical(obj), sort_keys=True, indent=2) + "\n"


def write_json(obj, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps(obj))


def write_matrix_csv(M, path) -> None:
    M = np.atleast_2d(np.asarray(M, float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in M:
            w.writerow([_fmt(v) for v in row])
