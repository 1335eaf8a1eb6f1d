import numpy as np
import pytest

import bilinopt as bo
from bilinopt.errors import (
    ConvergenceFailureError,
    GridMismatchError,
    SimulationDivergenceError,
)
from bilinopt.verify import _HamiltonianField, _newton_shoot, simpson_weights

import problems


def _scalar_problem(a=-1.0, q=1.0, qf=0.0, tf=1.0, x0=1.0):
    return bo.BilinearProblem.create(
        A=[[a]], B=[[1.0]], N=[[[0.0]]], Q=[[q]], Qf=[[qf]], R=[[1.0]],
        x0=[x0], t0=0.0, tf=tf,
    )


def test_forward_simulate_decay_closed_form():
    p = _scalar_problem(a=-1.0)
    grid = bo.TimeGrid(0.0, 1.0, 300)
    u = bo.Trajectory(grid, np.zeros((301, 1)))
    x = bo.forward_simulate(p, u)
    assert abs(x.values[-1, 0] - np.exp(-1.0)) < 1e-8


def test_forward_simulate_divergence_raises():
    p = _scalar_problem(a=3000.0, tf=3.0, x0=1e60)
    grid = bo.TimeGrid(0.0, 3.0, 30)
    u = bo.Trajectory(grid, np.zeros((31, 1)))
    with pytest.raises(SimulationDivergenceError):
        bo.forward_simulate(p, u)


def test_simpson_weights():
    w = simpson_weights(4)
    assert w == pytest.approx(np.array([1, 4, 2, 4, 1]) / 3.0)
    with pytest.raises(ValueError):
        simpson_weights(5)


def test_cost_of_constant_state():
    p = _scalar_problem(q=2.0, qf=0.0)
    grid = bo.TimeGrid(0.0, 1.0, 10)
    x = bo.Trajectory(grid, np.ones((11, 1)))
    u = bo.Trajectory(grid, np.zeros((11, 1)))
    assert bo.cost_evaluate(p, x, u) == pytest.approx(1.0, abs=1e-14)


def test_cost_grid_mismatch():
    p = _scalar_problem()
    x = bo.Trajectory(bo.TimeGrid(0.0, 1.0, 10), np.ones((11, 1)))
    u = bo.Trajectory(bo.TimeGrid(0.0, 1.0, 8), np.zeros((9, 1)))
    with pytest.raises(GridMismatchError):
        bo.cost_evaluate(p, x, u)


def test_residual_flags_boundary_violation(reactor):
    grid = bo.TimeGrid(0.0, 3.0, 50)
    zeros = bo.Trajectory(grid, np.zeros((51, 2)))
    rep = bo.tpbvp_residual(reactor, zeros, zeros)
    assert rep.state_sup == 0.0
    assert rep.costate_sup == 0.0
    assert rep.boundary_t0 == pytest.approx(0.15)
    assert rep.overall_sup == pytest.approx(0.15)


def test_residual_of_reference_is_pure_discretization(weak_reactor):
    sups = []
    floors = []
    for K in (300, 600):
        ref = bo.reference_solve(weak_reactor, bo.TimeGrid(0.0, 3.0, K))
        rep = bo.tpbvp_residual(weak_reactor, ref.x, ref.lam)
        sups.append(rep.overall_sup)
        floors.append(rep.floor_estimate)
    assert sups[0] / sups[1] > 3.0
    assert 0.1 < sups[1] / floors[1] < 10.0


def test_residual_mode_selects_equations(weak_reactor):
    grid = bo.TimeGrid(0.0, 3.0, 300)
    sol = bo.hpm_iterate(weak_reactor, grid, max_orders=20)
    full = bo.tpbvp_residual(weak_reactor, sol.x_sum, sol.lam_sum, mode=bo.MODE_FULL)
    lin = bo.tpbvp_residual(
        weak_reactor, sol.x_sum, sol.lam_sum, mode=bo.MODE_LINEAR_GAIN
    )
    # the series solves the stationarity system; the linear-gain equations
    # describe a different closed loop, so their residual must be well above
    # the discretization floor
    assert lin.state_sup > 3.0 * full.state_sup


def test_hamiltonian_field_matches_model(rng):
    p = problems.random_bilinear(rng, n=3, m=2, coupling=0.8)
    field = _HamiltonianField(p)
    S = p.B @ p.R_inv @ p.B.T
    z = rng.standard_normal((7, 6))
    x, lam = z[:, :3], z[:, 3:]
    state = x @ p.A.T - lam @ S.T + bo.eval_phi(p, x, lam)
    costate = -x @ p.Q.T - lam @ p.A + bo.eval_psi(p, x, lam)
    assert np.allclose(field.rhs(z), np.hstack([state, costate]), atol=1e-12)


def test_reference_matches_series_on_convergent_problem(weak_reactor):
    grid = bo.TimeGrid(0.0, 3.0, 300)
    ref = bo.reference_solve(weak_reactor, grid)
    assert ref.defect_norm < 1e-9
    sol = bo.hpm_iterate(weak_reactor, grid, max_orders=25)
    assert np.abs(sol.x_sum.values - ref.x.values).max() < 1e-3
    assert np.abs(sol.lam_sum.values - ref.lam.values).max() < 1e-3
    expected_u = bo.control_law(weak_reactor, ref.x.values, ref.lam.values)
    assert np.allclose(ref.u.values, expected_u)


def test_forward_simulation_consistent_with_series(weak_reactor):
    """Replaying the assembled control reproduces the summed state.

    The gap is bounded by the equation residual of the partial sums
    accumulated over the horizon.
    """
    grid = bo.TimeGrid(0.0, 3.0, 300)
    sol = bo.hpm_iterate(weak_reactor, grid, max_orders=20)
    rep = bo.tpbvp_residual(weak_reactor, sol.x_sum, sol.lam_sum)
    x_sim = bo.forward_simulate(weak_reactor, sol.u)
    gap = np.abs(x_sim.values - sol.x_sum.values).max()
    assert gap < 10.0 * rep.overall_sup


def test_reference_needs_no_newton_steps_for_lq(rng):
    p = problems.random_lq(rng, n=3, m=2)
    ref = bo.reference_solve(p, bo.TimeGrid(p.t0, p.tf, 400))
    assert ref.newton_iterations <= 2
    assert ref.defect_norm < 1e-9


def test_shooting_basin_around_solution(weak_reactor, rng):
    grid = bo.TimeGrid(0.0, 3.0, 300)
    ref = bo.reference_solve(weak_reactor, grid)
    ell_true = ref.lam.values[0]
    field = _HamiltonianField(weak_reactor)
    ell_pert = ell_true + 0.1 * rng.standard_normal(2)
    ell, fnorm, _, ok = _newton_shoot(
        weak_reactor, field, grid.K, ell_pert, 1e-9, 50
    )
    assert ok
    assert np.abs(ell - ell_true).max() < 1e-6


def test_reference_failure_carries_best_iterate():
    # the quadratic coupling overflows for any initial costate, so shooting,
    # then every continuation stage, must give up
    p = bo.BilinearProblem.create(
        A=[[1.0]], B=[[1.0]], N=[[[1.0]]], Q=[[1.0]], Qf=[[1.0]], R=[[1.0]],
        x0=[1e160], t0=0.0, tf=1.0,
    )
    with pytest.raises(ConvergenceFailureError) as exc:
        bo.reference_solve(p, bo.TimeGrid(0.0, 1.0, 10))
    assert exc.value.best_costate is not None
