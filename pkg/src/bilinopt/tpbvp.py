"""Linear time-invariant two-point boundary value solver.

Solves dz/dt = M z + h(t) for z = (x; lam) with x(t0) = a and
lam(tf) = Qf x(tf) + c, where M is the Hamiltonian block matrix
[[A, -S], [-Q, -A']]. The forcing is piecewise linear on the grid and is
integrated exactly through an augmented matrix exponential, so the only
iteration-free discretization error is the piecewise-linear interpolation
of h itself.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateBoundaryError, GridMismatchError, NumericRangeError

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = t0 + k*dt, k = 0..K."""

    t0: float
    tf: float
    K: int

    def __post_init__(self):
        if self.K < 2:
            raise ValueError(f"grid needs K >= 2 intervals, got {self.K}")
        if not self.t0 < self.tf:
            raise ValueError(f"grid needs t0 < tf, got [{self.t0}, {self.tf}]")

    @property
    def dt(self):
        return (self.tf - self.t0) / self.K

    @property
    def nodes(self):
        return np.linspace(self.t0, self.tf, self.K + 1)


@dataclass(frozen=True)
class Trajectory:
    """Sampled vector path on a TimeGrid: values has shape (K+1, d)."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != self.grid.K + 1:
            raise ValueError(
                f"expected ({self.grid.K + 1}, d) samples, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("trajectory contains non-finite samples")
        object.__setattr__(self, "values", v)

    @property
    def d(self):
        return self.values.shape[1]


def same_grid(g1, g2, tol=1e-12):
    return (
        g1.K == g2.K
        and abs(g1.t0 - g2.t0) <= tol * (1 + abs(g1.t0))
        and abs(g1.tf - g2.tf) <= tol * (1 + abs(g1.tf))
    )


@dataclass(frozen=True)
class HamiltonianMatrix:
    """2n x 2n block matrix [[A, -S], [-Q, -A']] with S = B R^-1 B'."""

    matrix: np.ndarray
    n: int


def assemble_hamiltonian_matrix(problem):
    S = problem.B @ problem.R_inv @ problem.B.T
    M = np.block([[problem.A, -S], [-problem.Q, -problem.A.T]])
    return HamiltonianMatrix(matrix=M, n=problem.n)


def expm(M, dt=1.0):
    """e^{M dt} via scaling-and-squaring; raises on non-finite output."""
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)) or not np.isfinite(dt):
        raise NumericRangeError("matrix exponential input contains non-finite entries")
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(M * dt)
    if not np.all(np.isfinite(E)):
        raise NumericRangeError(
            f"matrix exponential overflowed for ||M dt|| = {np.linalg.norm(M) * abs(dt):.3e}"
        )
    return E


class _StepOperator:
    """One-step propagator for dz/dt = M z + h with h linear inside the step.

    Exact update z_{k+1} = E z_k + G1 h_k + G2 (h_{k+1} - h_k)/dt with
    E = e^{M dt}, G1 = int_0^dt e^{M(dt-s)} ds, G2 = int_0^dt e^{M(dt-s)} s ds,
    all read off one augmented matrix exponential.
    """

    def __init__(self, M, dt):
        M = np.asarray(M, dtype=float)
        d = M.shape[0]
        aug = np.zeros((3 * d, 3 * d))
        aug[:d, :d] = M
        aug[:d, d : 2 * d] = np.eye(d)
        aug[d : 2 * d, 2 * d :] = np.eye(d)
        E = expm(aug, dt)
        self.dt = float(dt)
        self.E = E[:d, :d]
        self.G1 = E[:d, d : 2 * d]
        self.G2 = E[:d, 2 * d :]

    def step(self, z_k, h_k, h_k1):
        slope = (h_k1 - h_k) / self.dt
        return z_k @ self.E.T + h_k @ self.G1.T + slope @ self.G2.T


def propagate_step(M, z_k, h_k, h_k1, dt):
    """Single exact step of dz/dt = M z + h; see _StepOperator."""
    if dt <= 0:
        raise ValueError(f"step size must be positive, got {dt}")
    return _StepOperator(M, dt).step(
        np.asarray(z_k, dtype=float),
        np.asarray(h_k, dtype=float),
        np.asarray(h_k1, dtype=float),
    )


@dataclass(frozen=True)
class LinearTpbvpSpec:
    """One linear TPBVP: dz/dt = M z + h, x(t0) = a, lam(tf) = Qf x(tf) + c.

    h is the stacked 2n forcing trajectory (None means zero forcing).
    """

    M: HamiltonianMatrix
    Qf: np.ndarray
    a: np.ndarray
    c: np.ndarray
    h: Trajectory | None = None


def solve_linear_ti_tpbvp(spec, grid):
    """Solve the linear TPBVP on `grid`; returns (x, lam) trajectories.

    Transition-matrix method: propagate the zero-state particular solution q,
    form the terminal map z(tf) = E^K [a; ell] + q(tf), solve the n x n
    boundary system for the unknown initial costate ell, then re-propagate.
    """
    M = spec.M.matrix
    n = spec.M.n
    d = 2 * n
    a = np.asarray(spec.a, dtype=float).reshape(n)
    c = np.asarray(spec.c, dtype=float).reshape(n)
    if spec.h is not None:
        if not same_grid(spec.h.grid, grid):
            raise GridMismatchError("forcing trajectory is not sampled on the solve grid")
        if spec.h.values.shape[1] != d:
            raise GridMismatchError(
                f"forcing must have {d} components, got {spec.h.values.shape[1]}"
            )
        h = spec.h.values
    else:
        h = None

    K = grid.K
    op = _StepOperator(M, grid.dt)

    q_tf = np.zeros(d)
    if h is not None:
        q = np.zeros(d)
        for k in range(K):
            q = op.step(q, h[k], h[k + 1])
        q_tf = q

    EK = np.linalg.matrix_power(op.E, K)
    P11, P12 = EK[:n, :n], EK[:n, n:]
    P21, P22 = EK[n:, :n], EK[n:, n:]
    bmat = P22 - spec.Qf @ P12
    cond = np.linalg.cond(bmat)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise DegenerateBoundaryError(cond)
    rhs = spec.Qf @ (P11 @ a + q_tf[:n]) + c - P21 @ a - q_tf[n:]
    ell = np.linalg.solve(bmat, rhs)

    z = np.empty((K + 1, d))
    z[0] = np.concatenate([a, ell])
    if h is None:
        for k in range(K):
            z[k + 1] = z[k] @ op.E.T
    else:
        for k in range(K):
            z[k + 1] = op.step(z[k], h[k], h[k + 1])
    return Trajectory(grid, z[:, :n]), Trajectory(grid, z[:, n:])


def linear_residual(spec, grid, x, lam):
    """Central-difference residual of dz/dt = M z + h for a solved pair.

    Returns (sup_residual, c_estimate) where c_estimate = sup_residual / dt^2
    reports the constant of the second-order discretization floor.
    """
    z = np.hstack([x.values, lam.values])
    dt = grid.dt
    dz = np.empty_like(z)
    dz[1:-1] = (z[2:] - z[:-2]) / (2 * dt)
    dz[0] = (-3 * z[0] + 4 * z[1] - z[2]) / (2 * dt)
    dz[-1] = (3 * z[-1] - 4 * z[-2] + z[-3]) / (2 * dt)
    rhs = z @ spec.M.matrix.T
    if spec.h is not None:
        rhs = rhs + spec.h.values
    sup = float(np.abs(dz - rhs).max())
    return sup, sup / dt**2
