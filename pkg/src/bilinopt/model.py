"""Bilinear-quadratic optimal control problem and maximum-principle quantities.

The problem is

    dx/dt = A x + B u + (sum_j x_j N_j) u,   x(t0) = x0,
    J = 1/2 x(tf)' Qf x(tf) + 1/2 int_{t0}^{tf} (x' Q x + u' R u) dt,

and the stationarity conditions turn it into a two-point boundary value
problem for the state x and costate lam:

    dx/dt   = A x - B R^-1 B' lam + phi(x, lam),     x(t0) = x0,
    dlam/dt = -Q x - A' lam + psi(x, lam),           lam(tf) = Qf x(tf).

phi and psi collect everything the bilinear coupling adds on top of the
linear-quadratic Hamiltonian system; they vanish when all N_j are zero.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ProblemValidationError

MODE_FULL = "full"
MODE_LINEAR_GAIN = "linear-gain"
CONTROL_MODES = (MODE_FULL, MODE_LINEAR_GAIN)

_PSD_TOL = 1e-10
_ASYM_WARN = 1e-9


def _as_matrix(name, value, shape):
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        raise ProblemValidationError(name, f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ProblemValidationError(name, "contains non-finite entries")
    return arr


def _symmetrize(name, arr):
    asym = np.abs(arr - arr.T).max() if arr.size else 0.0
    if asym > _ASYM_WARN:
        warnings.warn(f"{name} asymmetry {asym:.3e} exceeds {_ASYM_WARN:g}; symmetrizing")
    return 0.5 * (arr + arr.T)


@dataclass(frozen=True)
class BilinearProblem:
    """Immutable problem data. Use `BilinearProblem.create` to validate."""

    n: int
    m: int
    A: np.ndarray
    B: np.ndarray
    N: tuple
    Q: np.ndarray
    Qf: np.ndarray
    R: np.ndarray
    x0: np.ndarray
    t0: float
    tf: float
    # derived, filled by create()
    R_inv: np.ndarray = field(repr=False, default=None)
    N_stack: np.ndarray = field(repr=False, default=None)

    @staticmethod
    def create(A, B, N, Q, Qf, R, x0, t0, tf):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        n = A.shape[0]
        A = _as_matrix("A", A, (n, n))
        B = np.asarray(B, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        m = B.shape[1]
        B = _as_matrix("B", B, (n, m))
        if len(N) != n:
            raise ProblemValidationError("N", f"expected {n} coupling matrices, got {len(N)}")
        N = tuple(_as_matrix(f"N[{j}]", Nj, (n, m)) for j, Nj in enumerate(N))
        Q = _symmetrize("Q", _as_matrix("Q", Q, (n, n)))
        Qf = _symmetrize("Qf", _as_matrix("Qf", Qf, (n, n)))
        R = _symmetrize("R", _as_matrix("R", R, (m, m)))
        for name, W in (("Q", Q), ("Qf", Qf)):
            if np.linalg.eigvalsh(W).min() < -_PSD_TOL:
                raise ProblemValidationError(name, "must be positive semi-definite")
        if np.linalg.eigvalsh(R).min() <= 0:
            raise ProblemValidationError("R", "must be symmetric positive definite")
        x0 = np.asarray(x0, dtype=float).reshape(-1)
        if x0.shape != (n,):
            raise ProblemValidationError("x0", f"expected length {n}, got {x0.shape[0]}")
        if not np.all(np.isfinite(x0)):
            raise ProblemValidationError("x0", "contains non-finite entries")
        t0, tf = float(t0), float(tf)
        if not (np.isfinite(t0) and np.isfinite(tf)):
            raise ProblemValidationError("t0", "horizon endpoints must be finite")
        if not t0 < tf:
            raise ProblemValidationError("tf", f"horizon must satisfy t0 < tf, got [{t0}, {tf}]")
        return BilinearProblem(
            n=n, m=m, A=A, B=B, N=N, Q=Q, Qf=Qf, R=R, x0=x0, t0=t0, tf=tf,
            R_inv=np.linalg.inv(R), N_stack=np.stack(N),
        )

    def scaled_coupling(self, factor):
        """Copy of the problem with every N_j multiplied by `factor`."""
        return BilinearProblem.create(
            self.A, self.B, [factor * Nj for Nj in self.N],
            self.Q, self.Qf, self.R, self.x0, self.t0, self.tf,
        )


def _check_vec(problem, name, v):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != problem.n:
        raise ProblemValidationError(name, f"last axis must be {problem.n}, got {v.shape}")
    return v


def n_of_x(problem, x):
    """N(x) = sum_j x_j N_j, shape (..., n, m). Batched over leading axes."""
    x = _check_vec(problem, "x", x)
    return np.einsum("...j,jkm->...km", x, problem.N_stack)


def control_law(problem, x, lam, mode=MODE_FULL):
    """Control from state and costate.

    full:        u = -R^-1 (B + N(x))' lam   (Hamiltonian stationarity)
    linear-gain: u = -R^-1 B' lam            (coupling dropped from the gain)
    """
    x = _check_vec(problem, "x", x)
    lam = _check_vec(problem, "lam", lam)
    if mode == MODE_FULL:
        gain = problem.B + n_of_x(problem, x)
        return -np.einsum("mp,...kp,...k->...m", problem.R_inv, gain, lam)
    if mode == MODE_LINEAR_GAIN:
        return -np.einsum("mp,kp,...k->...m", problem.R_inv, problem.B, lam)
    raise ValueError(f"unknown control mode {mode!r}; expected one of {CONTROL_MODES}")


def hamiltonian(problem, x, lam, u):
    """H = 1/2 x'Qx + 1/2 u'Ru + lam'(Ax + (B + N(x))u). Batched."""
    x = _check_vec(problem, "x", x)
    lam = _check_vec(problem, "lam", lam)
    u = np.asarray(u, dtype=float)
    quad = 0.5 * np.einsum("...i,ij,...j->...", x, problem.Q, x)
    quad = quad + 0.5 * np.einsum("...i,ij,...j->...", u, problem.R, u)
    drift = np.einsum("...i,ij,...j->...", lam, problem.A, x)
    gain = problem.B + n_of_x(problem, x)
    return quad + drift + np.einsum("...i,...im,...m->...", lam, gain, u)


def eval_phi(problem, x, lam):
    """phi(x, lam) = -(B R^-1 N(x)' + N(x) R^-1 B' + N(x) R^-1 N(x)') lam."""
    x = _check_vec(problem, "x", x)
    lam = _check_vec(problem, "lam", lam)
    Nx = n_of_x(problem, x)
    BRi = problem.B @ problem.R_inv
    t1 = np.einsum("km,...jm,...j->...k", BRi, Nx, lam)
    t2 = np.einsum("...km,mp,jp,...j->...k", Nx, problem.R_inv, problem.B, lam)
    t3 = np.einsum("...km,mp,...jp,...j->...k", Nx, problem.R_inv, Nx, lam)
    return -(t1 + t2 + t3)


def eval_psi(problem, x, lam):
    """psi with components psi_j = -lam' N_j u*(x, lam)."""
    x = _check_vec(problem, "x", x)
    lam = _check_vec(problem, "lam", lam)
    u = control_law(problem, x, lam, MODE_FULL)
    return -np.einsum("...k,jkm,...m->...j", lam, problem.N_stack, u)


@dataclass(frozen=True)
class OperatorSplit:
    """Linear-part blocks and nonlinear-part evaluators of the boundary value problem.

    The state and costate equations split as L + N with linear operators
    built from (A, S, Q, A') and nonlinear remainders N1 = -phi, N2 = -psi.
    """

    problem: BilinearProblem
    A: np.ndarray
    S: np.ndarray
    Q: np.ndarray
    At: np.ndarray

    def nonlinear_state(self, x, lam):
        """N1(x, lam) = -phi(x, lam)."""
        return -eval_phi(self.problem, x, lam)

    def nonlinear_costate(self, x, lam):
        """N2(x, lam) = -psi(x, lam)."""
        return -eval_psi(self.problem, x, lam)


def operator_split(problem):
    S = problem.B @ problem.R_inv @ problem.B.T
    return OperatorSplit(problem=problem, A=problem.A, S=S, Q=problem.Q, At=problem.A.T)
