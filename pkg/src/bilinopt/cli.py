"""Command-line front end: solve, verify, reactor-demo, serve.

Exit codes: 0 clean solve (tolerance met or order budget exhausted),
1 input or solver error, 2 series divergence detected. Artifacts are
deterministic; wall-clock timing goes to stdout only.
"""
from __future__ import annotations

import json
import os
import time
import warnings

import click
from pydantic import ValidationError

from . import artifacts, hpm, model, verify
from .errors import BilinoptError
from .reactor import reactor_problem
from .schemas import ProblemFileModel, RunConfigModel
from .tpbvp import TimeGrid

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DIVERGENCE = 2


def _format_validation_error(err):
    parts = []
    for item in err.errors():
        loc = ".".join(str(p) for p in item["loc"]) or "problem"
        parts.append(f"{loc}: {item['msg']}")
    return "; ".join(parts)


def load_problem_file(path):
    """Parse and validate a problem JSON file; raises BilinoptError subclasses."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as e:
        raise BilinoptError(f"cannot read problem file: {e}") from e
    except json.JSONDecodeError as e:
        raise BilinoptError(
            f"problem file is not valid JSON (line {e.lineno}, column {e.colno}): {e.msg}"
        ) from e
    try:
        parsed = ProblemFileModel.model_validate(raw)
    except ValidationError as e:
        raise BilinoptError(_format_validation_error(e)) from e
    return parsed.to_problem()


def _emit_solution(problem, config, out_dir, plot_data=False, problem_copy=False):
    os.makedirs(out_dir, exist_ok=True)
    grid = TimeGrid(problem.t0, problem.tf, config.grid_steps)
    started = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        solution = hpm.hpm_iterate(
            problem, grid, max_orders=config.orders, tol=config.tol,
            mode=config.control_mode,
        )
    wall = time.perf_counter() - started
    residual = verify.tpbvp_residual(problem, solution.x_sum, solution.lam_sum)

    artifacts.write_trajectories_csv(
        os.path.join(out_dir, "trajectories.csv"), solution.x_sum, solution.lam_sum,
        solution.u,
    )
    artifacts.dump_json(
        os.path.join(out_dir, "diagnostics.json"),
        artifacts.diagnostics_payload(solution, residual, grid.K),
    )
    if plot_data:
        artifacts.write_plot_data_csv(
            os.path.join(out_dir, "plot_data.csv"), solution.x_sum, solution.u
        )
    if problem_copy:
        artifacts.dump_json(
            os.path.join(out_dir, "problem.json"),
            ProblemFileModel.from_problem(problem).model_dump(),
        )

    report = solution.report
    click.echo(f"stop reason: {report.stop_reason}")
    click.echo(f"orders computed: {len(solution.terms) - 1}")
    click.echo("term sup-norms: " + ", ".join(f"{s:.6g}" for s in report.sup_norms))
    if report.ratios:
        click.echo(
            "ratio estimates: "
            + ", ".join("n/a" if r is None else f"{r:.6g}" for r in report.ratios)
        )
    click.echo(f"cost J = {solution.cost:.9g}")
    click.echo(f"residual sup-norm = {residual.overall_sup:.6g}")
    click.echo(f"artifacts written to {out_dir}")
    click.echo(f"wall time: {wall:.3f} s")
    if report.stop_reason == hpm.STOP_DIVERGENCE:
        click.echo("warning: series divergence detected; partial sums are unreliable")
        return EXIT_DIVERGENCE
    return EXIT_OK


def cmd_solve(problem_path, config, out_dir="."):
    """Solve a problem file and write trajectory and diagnostics artifacts."""
    try:
        problem = load_problem_file(problem_path)
        return _emit_solution(problem, config, out_dir)
    except BilinoptError as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_ERROR
    except ValueError as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_ERROR


def cmd_verify(problem_path, trajectories_path, threshold=1e-3, against_reference=False):
    """Check a trajectory file against the optimality system of a problem."""
    try:
        problem = load_problem_file(problem_path)
        x, lam, u = artifacts.read_trajectories_csv(trajectories_path, problem.n, problem.m)
        residual = verify.tpbvp_residual(problem, x, lam)
        cost = verify.cost_evaluate(problem, x, u)
    except (BilinoptError, ValueError, OSError) as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_ERROR

    click.echo(f"state residual:   sup {residual.state_sup:.6g}  L2 {residual.state_l2:.6g}")
    click.echo(
        f"costate residual: sup {residual.costate_sup:.6g}  L2 {residual.costate_l2:.6g}"
    )
    click.echo(
        f"boundary defects: t0 {residual.boundary_t0:.6g}  tf {residual.boundary_tf:.6g}"
    )
    click.echo(f"discretization floor estimate: {residual.floor_estimate:.6g}")
    click.echo(f"cost J = {cost:.9g}")

    if against_reference:
        try:
            ref = verify.reference_solve(problem, x.grid)
        except BilinoptError as e:
            click.echo(f"error: reference solve failed: {e}", err=True)
            return EXIT_ERROR
        import numpy as np

        x_diff = float(np.abs(x.values - ref.x.values).max())
        lam_diff = float(np.abs(lam.values - ref.lam.values).max())
        u_diff = float(np.abs(u.values - ref.u.values).max())
        cost_ref = verify.cost_evaluate(problem, ref.x, ref.u)
        click.echo("against reference:")
        click.echo(f"  sup |x - x_ref|     = {x_diff:.6g}")
        click.echo(f"  sup |lam - lam_ref| = {lam_diff:.6g}")
        click.echo(f"  sup |u - u_ref|     = {u_diff:.6g}")
        click.echo(f"  reference cost      = {cost_ref:.9g}")
        click.echo(
            f"  reference defect    = {ref.defect_norm:.3e} "
            f"({ref.newton_iterations} Newton iterations)"
        )

    ok = residual.overall_sup <= threshold
    click.echo(
        f"residual sup-norm {residual.overall_sup:.6g} "
        f"{'<=' if ok else '>'} threshold {threshold:g}"
    )
    return EXIT_OK if ok else EXIT_ERROR


def cmd_reactor_demo(config, out_dir="."):
    """Run the built-in reactor benchmark and emit solve artifacts plus plot data."""
    try:
        return _emit_solution(
            reactor_problem(), config, out_dir, plot_data=True, problem_copy=True
        )
    except BilinoptError as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_ERROR


def _config_options(defaults):
    def wrap(fn):
        fn = click.option(
            "--control-mode", type=click.Choice(list(model.CONTROL_MODES)),
            default=defaults.control_mode, show_default=True,
        )(fn)
        fn = click.option("--tol", type=float, default=defaults.tol, show_default=True)(fn)
        fn = click.option(
            "--grid-steps", type=int, default=defaults.grid_steps, show_default=True
        )(fn)
        fn = click.option(
            "--orders", type=int, default=defaults.orders, show_default=True
        )(fn)
        return fn

    return wrap


def _build_config(orders, grid_steps, tol, control_mode):
    try:
        return RunConfigModel(
            orders=orders, grid_steps=grid_steps, tol=tol, control_mode=control_mode
        ), None
    except ValidationError as e:
        return None, _format_validation_error(e)


@click.group()
def main():
    """Quadratic optimal control of bilinear systems by homotopy series."""


@main.command("solve")
@click.option("--problem", "problem_path", required=True, type=click.Path())
@_config_options(RunConfigModel())
@click.option("--out", "out_dir", default=".", show_default=True, type=click.Path())
def solve_command(problem_path, orders, grid_steps, tol, control_mode, out_dir):
    """Solve a problem file; writes trajectories.csv and diagnostics.json."""
    config, err = _build_config(orders, grid_steps, tol, control_mode)
    if err:
        click.echo(f"error: {err}", err=True)
        raise SystemExit(EXIT_ERROR)
    raise SystemExit(cmd_solve(problem_path, config, out_dir))


@main.command("verify")
@click.option("--problem", "problem_path", required=True, type=click.Path())
@click.option("--trajectories", "trajectories_path", required=True, type=click.Path())
@click.option("--threshold", type=float, default=1e-3, show_default=True)
@click.option("--against-reference", is_flag=True, default=False)
def verify_command(problem_path, trajectories_path, threshold, against_reference):
    """Verify a trajectory CSV against a problem's optimality system."""
    raise SystemExit(
        cmd_verify(problem_path, trajectories_path, threshold, against_reference)
    )


@main.command("reactor-demo")
@_config_options(RunConfigModel(orders=3))
@click.option("--out", "out_dir", default=".", show_default=True, type=click.Path())
def reactor_demo_command(orders, grid_steps, tol, control_mode, out_dir):
    """Run the built-in reactor benchmark problem."""
    config, err = _build_config(orders, grid_steps, tol, control_mode)
    if err:
        click.echo(f"error: {err}", err=True)
        raise SystemExit(EXIT_ERROR)
    raise SystemExit(cmd_reactor_demo(config, out_dir))


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve_command(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)
