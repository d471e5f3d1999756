"""CSV export and read-back for trajectories, diagnostics and iterate histories.

Numbers are written with 17 significant digits so a round trip through the
file reproduces every float exactly.
"""

import csv
from pathlib import Path

import numpy as np

__all__ = [
    "write_csv",
    "read_csv",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "trajectory_header",
    "DIAGNOSTICS_HEADER",
]

DIAGNOSTICS_HEADER = ["T", "ergodic_gap", "bound", "lyapunov", "field_norm"]


def _fmt(x):
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    """Write a header line and one line per row of a 2-D array."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def read_csv(path):
    """Return ``(header, data)`` with ``data`` a float array of shape (rows, cols)."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = [h.strip() for h in next(r)]
        data = [[float(x) for x in row] for row in r if row]
    arr = np.array(data, dtype=float).reshape(len(data), len(header))
    return header, arr


def trajectory_header(dim):
    return (["t"] + [f"x_{i}" for i in range(dim)] + [f"v_{i}" for i in range(dim)]
            + ["a_norm", "field_norm"])


def write_trajectory_csv(traj, path):
    rows = np.column_stack([
        traj.times, traj.x, traj.v,
        np.linalg.norm(traj.a, axis=1),
        np.linalg.norm(traj.field_values, axis=1),
    ])
    return write_csv(path, trajectory_header(traj.dim), rows)


def read_trajectory_csv(path):
    """Read a trajectory CSV back into a dict of arrays."""
    header, data = read_csv(path)
    n = sum(1 for h in header if h.startswith("x_"))
    return {
        "t": data[:, 0],
        "x": data[:, 1:1 + n],
        "v": data[:, 1 + n:1 + 2 * n],
        "a_norm": data[:, 1 + 2 * n],
        "field_norm": data[:, 2 + 2 * n],
    }
