"""HTTP service exposing the solver over JSON.

POST /solve and /reactor-demo run the series solver and return trajectories
plus diagnostics; POST /verify recomputes residuals for submitted
trajectories. Semantic input errors map to 400 with a message naming the
offending key; shape errors are rejected by request validation (422).
"""
from __future__ import annotations

import warnings

import numpy as np
from fastapi import FastAPI, HTTPException

from . import __version__, hpm, verify
from .errors import BilinoptError
from .reactor import reactor_problem
from .schemas import (
    DiagnosticsModel,
    ReactorDemoRequest,
    ReferenceComparisonModel,
    ResidualModel,
    SolveRequest,
    SolveResponse,
    TrajectoryTableModel,
    VerifyRequest,
    VerifyResponse,
)
from .tpbvp import TimeGrid, Trajectory

app = FastAPI(title="bilinopt", version=__version__)


def _table_from_arrays(x, lam, u):
    return TrajectoryTableModel(
        t=[float(t) for t in x.grid.nodes],
        x=x.values.tolist(),
        lam=lam.values.tolist(),
        u=u.values.tolist(),
    )


def _table_to_trajectories(table, problem):
    t = np.asarray(table.t, dtype=float)
    if t.size < 3:
        raise BilinoptError("trajectories.t: need at least 3 nodes")
    if len(table.x) != t.size or len(table.lam) != t.size or len(table.u) != t.size:
        raise BilinoptError("trajectories: t, x, lam, u must have equal length")
    x = np.asarray(table.x, dtype=float)
    lam = np.asarray(table.lam, dtype=float)
    u = np.asarray(table.u, dtype=float)
    if x.ndim != 2 or x.shape[1] != problem.n:
        raise BilinoptError(f"trajectories.x: rows must have {problem.n} entries")
    if lam.ndim != 2 or lam.shape[1] != problem.n:
        raise BilinoptError(f"trajectories.lam: rows must have {problem.n} entries")
    if u.ndim != 2 or u.shape[1] != problem.m:
        raise BilinoptError(f"trajectories.u: rows must have {problem.m} entries")
    grid = TimeGrid(float(t[0]), float(t[-1]), t.size - 1)
    if not np.allclose(t, grid.nodes, rtol=0.0, atol=1e-9 * max(1.0, abs(float(t[-1])))):
        raise BilinoptError("trajectories.t: nodes must form a uniform grid")
    return Trajectory(grid, x), Trajectory(grid, lam), Trajectory(grid, u)


def _solve_response(problem, config):
    grid = TimeGrid(problem.t0, problem.tf, config.grid_steps)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        solution = hpm.hpm_iterate(
            problem, grid, max_orders=config.orders, tol=config.tol,
            mode=config.control_mode,
        )
    residual = verify.tpbvp_residual(problem, solution.x_sum, solution.lam_sum)
    report = solution.report
    diagnostics = DiagnosticsModel(
        orders_computed=len(solution.terms) - 1,
        grid_steps=grid.K,
        control_mode=solution.mode,
        sup_norms=[float(s) for s in report.sup_norms],
        ratios=[None if r is None else float(r) for r in report.ratios],
        tail_bound=None if report.tail_bound is None else float(report.tail_bound),
        residual=ResidualModel.from_report(residual),
        cost=float(solution.cost),
        stop_reason=report.stop_reason,
    )
    return SolveResponse(
        diagnostics=diagnostics,
        trajectories=_table_from_arrays(solution.x_sum, solution.lam_sum, solution.u),
    )


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/solve", response_model=SolveResponse)
def solve(request: SolveRequest):
    try:
        problem = request.problem.to_problem()
        return _solve_response(problem, request.config)
    except BilinoptError as e:
        raise HTTPException(status_code=400, detail=str(e)) from e


@app.post("/verify", response_model=VerifyResponse)
def verify_endpoint(request: VerifyRequest):
    try:
        problem = request.problem.to_problem()
        x, lam, u = _table_to_trajectories(request.trajectories, problem)
        residual = verify.tpbvp_residual(problem, x, lam)
        cost = verify.cost_evaluate(problem, x, u)
        comparison = None
        if request.against_reference:
            ref = verify.reference_solve(problem, x.grid)
            comparison = ReferenceComparisonModel(
                x_sup_diff=float(np.abs(x.values - ref.x.values).max()),
                lam_sup_diff=float(np.abs(lam.values - ref.lam.values).max()),
                u_sup_diff=float(np.abs(u.values - ref.u.values).max()),
                cost_reference=float(verify.cost_evaluate(problem, ref.x, ref.u)),
                newton_iterations=ref.newton_iterations,
                defect_norm=float(ref.defect_norm),
            )
    except (BilinoptError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e)) from e
    return VerifyResponse(
        residual=ResidualModel.from_report(residual),
        cost=float(cost),
        threshold=request.threshold,
        ok=bool(residual.overall_sup <= request.threshold),
        comparison=comparison,
    )


@app.post("/reactor-demo", response_model=SolveResponse)
def reactor_demo(request: ReactorDemoRequest):
    try:
        return _solve_response(reactor_problem(), request.config)
    except BilinoptError as e:
        raise HTTPException(status_code=400, detail=str(e)) from e
