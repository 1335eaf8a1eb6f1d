"""Deterministic artifact emission and ingestion: trajectory CSV, diagnostics JSON.

All numeric output uses 17 significant digits so that float64 values
round-trip exactly, and JSON is dumped with sorted keys; identical inputs
therefore produce bit-identical files.
"""
from __future__ import annotations

import csv
import json

import numpy as np

from .errors import GridMismatchError
from .tpbvp import TimeGrid, Trajectory


def _fmt(v):
    return format(float(v), ".17g")


def trajectory_header(n, m):
    return (
        ["t"]
        + [f"x_{i + 1}" for i in range(n)]
        + [f"lambda_{i + 1}" for i in range(n)]
        + [f"u_{i + 1}" for i in range(m)]
    )


def write_trajectories_csv(path, x, lam, u):
    """Columns t, x_1..x_n, lambda_1..lambda_n, u_1..u_m at 17 significant digits."""
    grid = x.grid
    n = x.d
    m = u.d
    t = grid.nodes
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(trajectory_header(n, m))
        for k in range(grid.K + 1):
            row = [t[k], *x.values[k], *lam.values[k], *u.values[k]]
            writer.writerow([_fmt(v) for v in row])


def read_trajectories_csv(path, n, m):
    """Parse a trajectory CSV back into (x, lam, u) trajectories."""
    expected = trajectory_header(n, m)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            raise GridMismatchError(
                f"trajectory columns {header} do not match the problem "
                f"dimensions (expected {expected})"
            )
        rows = [[float(v) for v in row] for row in reader if row]
    if len(rows) < 3:
        raise GridMismatchError(f"trajectory file has only {len(rows)} data rows")
    data = np.asarray(rows)
    t = data[:, 0]
    K = len(t) - 1
    grid = TimeGrid(t0=t[0], tf=t[-1], K=K)
    if np.abs(t - grid.nodes).max() > 1e-9 * (1 + np.abs(t).max()):
        raise GridMismatchError("time column is not a uniform grid")
    x = Trajectory(grid, data[:, 1 : 1 + n])
    lam = Trajectory(grid, data[:, 1 + n : 1 + 2 * n])
    u = Trajectory(grid, data[:, 1 + 2 * n :])
    return x, lam, u


def write_plot_data_csv(path, x, u):
    """Plot-ready file with t, the state components, and the control."""
    grid = x.grid
    t = grid.nodes
    header = ["t"] + [f"x_{i + 1}" for i in range(x.d)] + [f"u_{i + 1}" for i in range(u.d)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for k in range(grid.K + 1):
            writer.writerow([_fmt(v) for v in (t[k], *x.values[k], *u.values[k])])


def diagnostics_payload(solution, residual, grid_steps):
    """JSON-ready diagnostics dictionary for a series solution."""
    report = solution.report
    return {
        "orders_computed": len(solution.terms) - 1,
        "grid_steps": grid_steps,
        "control_mode": solution.mode,
        "sup_norms": [float(s) for s in report.sup_norms],
        "ratios": [None if r is None else float(r) for r in report.ratios],
        "tail_bound": None if report.tail_bound is None else float(report.tail_bound),
        "residual": {
            "state_sup": residual.state_sup,
            "state_l2": residual.state_l2,
            "costate_sup": residual.costate_sup,
            "costate_l2": residual.costate_l2,
            "boundary_t0": residual.boundary_t0,
            "boundary_tf": residual.boundary_tf,
            "floor_estimate": residual.floor_estimate,
            "overall_sup": residual.overall_sup,
        },
        "cost": float(solution.cost),
        "stop_reason": report.stop_reason,
    }


def dump_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
