"""Independent verification oracles for the state-costate boundary value problem.

Everything here deliberately avoids the series engine: residuals come from
finite differences of the supplied trajectories, forward simulation
re-integrates the dynamics from scratch, and the reference solver attacks
the full nonlinear boundary value problem directly by single shooting with
a damped Newton iteration on the unknown initial costate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model
from .errors import ConvergenceFailureError, GridMismatchError, SimulationDivergenceError
from .tpbvp import (
    LinearTpbvpSpec,
    TimeGrid,
    Trajectory,
    assemble_hamiltonian_matrix,
    same_grid,
    solve_linear_ti_tpbvp,
)


@dataclass(frozen=True)
class ResidualReport:
    """Finite-difference residual norms of the nonlinear TPBVP."""

    state_sup: float
    state_l2: float
    costate_sup: float
    costate_l2: float
    boundary_t0: float
    boundary_tf: float
    floor_estimate: float

    @property
    def overall_sup(self):
        return max(self.state_sup, self.costate_sup, self.boundary_t0, self.boundary_tf)


@dataclass(frozen=True)
class ReferenceSolution:
    """Shooting-based reference solution of the nonlinear TPBVP."""

    x: Trajectory
    lam: Trajectory
    u: Trajectory
    newton_iterations: int
    defect_norm: float


def _mode_fields(problem, x, lam, mode):
    """Right-hand sides of the coupled equations with the mode's control."""
    u = model.control_law(problem, x, lam, mode)
    gain = problem.B + model.n_of_x(problem, x)
    dx = x @ problem.A.T + np.einsum("...km,...m->...k", gain, u)
    psi = -np.einsum("...k,jkm,...m->...j", lam, problem.N_stack, u)
    dlam = -x @ problem.Q.T - lam @ problem.A + psi
    return dx, dlam


def _diff(values, dt):
    """Second-order first derivative: central inside, one-sided at the ends."""
    d = np.empty_like(values)
    d[1:-1] = (values[2:] - values[:-2]) / (2 * dt)
    d[0] = (-3 * values[0] + 4 * values[1] - values[2]) / (2 * dt)
    d[-1] = (3 * values[-1] - 4 * values[-2] + values[-3]) / (2 * dt)
    return d


def tpbvp_residual(problem, x, lam, mode=model.MODE_FULL):
    """Plug (x, lam) back into the coupled equations and report residual norms.

    The derivative is approximated to second order, so exact solutions still
    show an O(dt^2) floor; `floor_estimate` reports that floor from a
    third-derivative estimate of the supplied trajectories.
    """
    if not same_grid(x.grid, lam.grid):
        raise GridMismatchError("state and costate are on different grids")
    dt = x.grid.dt
    dx, dlam = _mode_fields(problem, x.values, lam.values, mode)
    r_state = _diff(x.values, dt) - dx
    r_costate = _diff(lam.values, dt) - dlam

    def sup(r):
        return float(np.linalg.norm(r, axis=1).max())

    def l2(r):
        return float(np.sqrt(dt * (np.linalg.norm(r, axis=1) ** 2).sum()))

    z = np.hstack([x.values, lam.values])
    if z.shape[0] >= 5:
        d3 = (z[4:] - 2 * z[3:-1] + 2 * z[1:-3] - z[:-4]) / (2 * dt**3)
        floor = float(dt**2 / 6 * np.linalg.norm(d3, axis=1).max())
    else:
        floor = 0.0
    return ResidualReport(
        state_sup=sup(r_state),
        state_l2=l2(r_state),
        costate_sup=sup(r_costate),
        costate_l2=l2(r_costate),
        boundary_t0=float(np.linalg.norm(x.values[0] - problem.x0)),
        boundary_tf=float(np.linalg.norm(lam.values[-1] - problem.Qf @ x.values[-1])),
        floor_estimate=floor,
    )


def forward_simulate(problem, u, x0=None):
    """Integrate the bilinear dynamics under a sampled control.

    Classical fourth-order one-step integration on the control's grid, with
    u interpolated linearly inside each step.
    """
    x0 = problem.x0 if x0 is None else np.asarray(x0, dtype=float)
    grid = u.grid
    uv = u.values
    dt = grid.dt

    def f(xv, uval):
        gain = problem.B + model.n_of_x(problem, xv)
        return problem.A @ xv + gain @ uval

    x = np.empty((grid.K + 1, problem.n))
    x[0] = x0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(grid.K):
            um = 0.5 * (uv[k] + uv[k + 1])
            k1 = f(x[k], uv[k])
            k2 = f(x[k] + 0.5 * dt * k1, um)
            k3 = f(x[k] + 0.5 * dt * k2, um)
            k4 = f(x[k] + dt * k3, uv[k + 1])
            x[k + 1] = x[k] + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(x[k + 1])):
                raise SimulationDivergenceError(k + 1)
    return Trajectory(grid, x)


def simpson_weights(K):
    if K % 2 != 0:
        raise ValueError(f"composite Simpson needs an even number of intervals, got {K}")
    w = np.ones(K + 1)
    w[1:-1:2] = 4.0
    w[2:-2:2] = 2.0
    return w / 3.0


def cost_evaluate(problem, x, u):
    """J = 1/2 x(tf)'Qf x(tf) + 1/2 int (x'Qx + u'Ru) dt, composite Simpson."""
    if not same_grid(x.grid, u.grid):
        raise GridMismatchError("state and control are on different grids")
    w = simpson_weights(x.grid.K)
    run = np.einsum("ki,ij,kj->k", x.values, problem.Q, x.values)
    run = run + np.einsum("ki,ij,kj->k", u.values, problem.R, u.values)
    terminal = 0.5 * x.values[-1] @ problem.Qf @ x.values[-1]
    return float(terminal + 0.5 * x.grid.dt * (w * run).sum())


class _HamiltonianField:
    """Cubic polynomial form of the coupled state-costate vector field.

    dz/dt = M z + C2(z, z) + C3(z, z, z) with the quadratic and cubic
    tensors assembled once per problem; this keeps the shooting integrator
    to three contractions per evaluation.
    """

    def __init__(self, problem):
        n = problem.n
        d = 2 * n
        S = problem.B @ problem.R_inv @ problem.B.T
        self.n = n
        self.M = np.block([[problem.A, -S], [-problem.Q, -problem.A.T]])
        C2 = np.zeros((d, d, d))
        C3 = np.zeros((d, d, d, d))
        NR = [Nj @ problem.R_inv for Nj in problem.N]
        for j, Nj in enumerate(problem.N):
            BRN = problem.B @ problem.R_inv @ Nj.T
            NRB = NR[j] @ problem.B.T
            C2[:n, j, n:] += -(BRN + NRB)
            C2[n + j, n:, n:] += NRB
            for l in range(n):
                NRN = NR[j] @ problem.N[l].T
                C3[:n, j, l, n:] += -NRN
                C3[n + j, l, n:, n:] += NRN
        self.C2 = C2
        self.C3 = C3

    def rhs(self, z):
        out = z @ self.M.T
        out = out + np.einsum("ijk,...j,...k->...i", self.C2, z, z)
        return out + np.einsum("ijkl,...j,...k,...l->...i", self.C3, z, z, z)


def _integrate(field, z0, dt, K, keep_path=False):
    """Batched RK4 for the coupled system; rows that blow up are frozen."""
    z = np.array(z0, dtype=float)
    alive = np.ones(z.shape[0], dtype=bool)
    path = np.empty((z.shape[0], K + 1, z.shape[1])) if keep_path else None
    if keep_path:
        path[:, 0] = z
    with np.errstate(all="ignore"):
        for k in range(K):
            k1 = field.rhs(z)
            k2 = field.rhs(z + 0.5 * dt * k1)
            k3 = field.rhs(z + 0.5 * dt * k2)
            k4 = field.rhs(z + dt * k3)
            znew = z + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            bad = ~np.all(np.isfinite(znew), axis=-1)
            if bad.any():
                znew[bad] = z[bad]
                alive &= ~bad
            z = znew
            if keep_path:
                path[:, k + 1] = z
    return (z, alive, path) if keep_path else (z, alive)


def _defect_norms(problem, zT, alive):
    with np.errstate(all="ignore"):
        d = zT[:, problem.n :] - zT[:, : problem.n] @ problem.Qf.T
        norms = np.linalg.norm(d, axis=1)
    norms[~alive] = np.inf
    norms[~np.isfinite(norms)] = np.inf
    return d, norms


def _newton_shoot(problem, field, K, ell, tol, max_iter):
    """Damped Newton on the terminal defect of the shooting map.

    Returns (ell, defect_norm, iterations, converged). Stops early when the
    defect norm improves by less than 10% over three consecutive damped
    steps.
    """
    n = problem.n
    dt = (problem.tf - problem.t0) / K
    history = []
    its = 0
    fnorm = np.inf
    for _ in range(max_iter):
        steps = 1e-6 * np.maximum(1.0, np.abs(ell))
        batch = np.vstack([ell, ell + np.diag(steps)])
        batch = np.hstack([np.broadcast_to(problem.x0, (n + 1, n)), batch])
        zT, alive = _integrate(field, batch, dt, K)
        defects, norms = _defect_norms(problem, zT, alive)
        fnorm = norms[0]
        if fnorm < tol:
            return ell, fnorm, its, True
        if not np.isfinite(fnorm):
            return ell, fnorm, its, False
        its += 1
        jac = ((defects[1:] - defects[0]) / steps[:, None]).T
        try:
            direction = np.linalg.solve(jac, -defects[0])
        except np.linalg.LinAlgError:
            return ell, fnorm, its, False
        damping = 0.5 ** np.arange(21)
        cands = ell + damping[:, None] * direction
        cbatch = np.hstack([np.broadcast_to(problem.x0, (len(cands), n)), cands])
        czT, calive = _integrate(field, cbatch, dt, K)
        _, cnorms = _defect_norms(problem, czT, calive)
        better = cnorms < fnorm
        if not better.any():
            return ell, fnorm, its, False
        ell = cands[int(np.argmax(better))]
        history.append(float(cnorms[int(np.argmax(better))]))
        if len(history) >= 4 and history[-1] > 0.9 * history[-4]:
            return ell, history[-1], its, False
    zT, alive = _integrate(field, np.hstack([problem.x0, ell])[None], dt, K)
    _, norms = _defect_norms(problem, zT, alive)
    return ell, norms[0], its, norms[0] < tol


def _order_zero_costate(problem, grid):
    spec = LinearTpbvpSpec(
        M=assemble_hamiltonian_matrix(problem),
        Qf=problem.Qf,
        a=problem.x0,
        c=np.zeros(problem.n),
    )
    _, lam = solve_linear_ti_tpbvp(spec, grid)
    return lam.values[0]


def reference_solve(problem, grid, newton_tol=1e-9, max_newton=50):
    """Solve the nonlinear TPBVP by single shooting on the initial costate.

    The Newton iteration starts from the initial costate of the
    linear-quadratic part of the problem. If that iteration stagnates, the
    solver falls back to a continuation in the coupling strength: the N_j
    are scaled by a factor walked from 0 to 1 on a coarse grid, each stage
    warm-started from the previous one, followed by a final full-grid
    polish. Raises ConvergenceFailureError with the best iterate if even the
    continuation cannot meet the tolerance.
    """
    if newton_tol <= 0:
        raise ValueError(f"newton_tol must be positive, got {newton_tol}")
    field = _HamiltonianField(problem)
    ell0 = _order_zero_costate(problem, grid)
    total_its = 0

    ell, fnorm, its, ok = _newton_shoot(problem, field, grid.K, ell0, newton_tol, max_newton)
    total_its += its

    if not ok:
        coarse_K = max(2, min(grid.K, 600))
        eps, deps = 0.0, 0.25
        ell = ell0
        best = (fnorm, ell)
        while eps < 1.0:
            etry = min(1.0, eps + deps)
            sub = problem.scaled_coupling(etry)
            subfield = _HamiltonianField(sub)
            e_new, f_new, its, ok_stage = _newton_shoot(
                sub, subfield, coarse_K, ell, 1e-8, 15
            )
            total_its += its
            if ok_stage:
                eps, ell = etry, e_new
                deps = min(0.25, 2 * deps)
            else:
                deps *= 0.5
                if deps < 1 / 64:
                    raise ConvergenceFailureError(
                        "shooting stagnated during coupling continuation at "
                        f"strength {eps:.4f} (best defect {best[0]:.3e})",
                        best_costate=best[1],
                        best_defect=best[0],
                    )
        ell, fnorm, its, ok = _newton_shoot(problem, field, grid.K, ell, newton_tol, 15)
        total_its += its
        if not ok:
            raise ConvergenceFailureError(
                f"full-grid polish stagnated with defect {fnorm:.3e}",
                best_costate=ell,
                best_defect=fnorm,
            )

    z0 = np.hstack([problem.x0, ell])[None]
    _, alive, path = _integrate(field, z0, grid.dt, grid.K, keep_path=True)
    z = path[0]
    x = Trajectory(grid, z[:, : problem.n])
    lam = Trajectory(grid, z[:, problem.n :])
    u = Trajectory(grid, model.control_law(problem, x.values, lam.values, model.MODE_FULL))
    return ReferenceSolution(
        x=x, lam=lam, u=u, newton_iterations=total_its, defect_norm=float(fnorm)
    )
