"""Homotopy series engine for the nonlinear state-costate boundary value problem.

The nonlinear TPBVP is embedded in a family indexed by p in [0, 1]; the
solution is expanded as a power series in p whose order-n coefficient pair
(x_n, lam_n) solves a linear time-invariant TPBVP driven by an exact
polynomial convolution of the lower-order terms. The engine builds terms
recursively, monitors the per-order norms for contraction, and assembles
partial sums, control, and cost at p = 1.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import model, verify
from .errors import GridMismatchError
from .tpbvp import (
    LinearTpbvpSpec,
    Trajectory,
    assemble_hamiltonian_matrix,
    same_grid,
    solve_linear_ti_tpbvp,
)

STOP_TOLERANCE = "tolerance-met"
STOP_MAX_ORDERS = "max-orders"
STOP_DIVERGENCE = "divergence-detected"


@dataclass(frozen=True)
class SeriesTerm:
    """One homotopy order: the coefficient pair (x_n(t), lam_n(t))."""

    order: int
    x_term: Trajectory
    lam_term: Trajectory


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-order diagnostics of the series.

    sup_norms[n] is s_n = sup_t ||(x_n, lam_n)(t)||_2; ratios[n-1] estimates
    the contraction factor s_n / s_{n-1} (None when the previous norm is
    zero); tail_bound is the geometric estimate s_N * r / (1 - r) when the
    last ratio r is below one.
    """

    sup_norms: tuple
    ratios: tuple
    tail_bound: float | None
    final_residual: float | None = None
    stop_reason: str | None = None


@dataclass(frozen=True)
class HpmSolution:
    """Assembled series solution at p = 1."""

    terms: tuple
    x_sum: Trajectory
    lam_sum: Trajectory
    u: Trajectory
    cost: float
    report: ConvergenceReport
    mode: str


def _term_norm(term):
    stacked = np.hstack([term.x_term.values, term.lam_term.values])
    return float(np.linalg.norm(stacked, axis=1).max())


def initial_guess(problem, grid):
    """Order-0 term: the linear-quadratic part of the TPBVP, zero forcing."""
    spec = LinearTpbvpSpec(
        M=assemble_hamiltonian_matrix(problem),
        Qf=problem.Qf,
        a=problem.x0,
        c=np.zeros(problem.n),
    )
    x, lam = solve_linear_ti_tpbvp(spec, grid)
    return SeriesTerm(order=0, x_term=x, lam_term=lam)


def _phi_bilinear(problem, xv, lv):
    Nx = model.n_of_x(problem, xv)
    BRi = problem.B @ problem.R_inv
    t1 = np.einsum("km,...jm,...j->...k", BRi, Nx, lv)
    t2 = np.einsum("...km,mp,jp,...j->...k", Nx, problem.R_inv, problem.B, lv)
    return -(t1 + t2)


def _phi_trilinear(problem, xa, xb, lv):
    Na = model.n_of_x(problem, xa)
    Nb = model.n_of_x(problem, xb)
    return -np.einsum("...km,mp,...jp,...j->...k", Na, problem.R_inv, Nb, lv)


def _psi_bilinear(problem, la, lb):
    NRB = np.einsum("jkm,mp,lp->jkl", problem.N_stack, problem.R_inv, problem.B)
    return np.einsum("...k,jkl,...l->...j", la, NRB, lb)


def _psi_trilinear(problem, la, xv, lb):
    Nx = model.n_of_x(problem, xv)
    return np.einsum("...k,jkm,mp,...lp,...l->...j", la, problem.N_stack, problem.R_inv, Nx, lb)


def series_coefficient_phi_psi(problem, terms, k):
    """Order-k coefficient of the nonlinear operators along the series.

    phi and psi are sums of bilinear and trilinear forms in the state and
    costate, so the coefficient of p^k is an exact discrete convolution of
    the term trajectories; no differentiation in p is performed. Returns the
    forcing pair (h1, h2) = minus the (phi, psi) coefficients.
    """
    if k < 0 or len(terms) < k + 1:
        raise ValueError(f"need terms of orders 0..{k}, got {len(terms)} terms")
    orders = [t.order for t in terms[: k + 1]]
    if orders != list(range(k + 1)):
        raise ValueError(f"terms must carry contiguous orders 0..{k}, got {orders}")
    grid = terms[0].x_term.grid
    for t in terms[: k + 1]:
        if not (same_grid(t.x_term.grid, grid) and same_grid(t.lam_term.grid, grid)):
            raise GridMismatchError("series terms are on different grids")

    xs = [t.x_term.values for t in terms]
    ls = [t.lam_term.values for t in terms]
    phi_k = np.zeros_like(xs[0])
    psi_k = np.zeros_like(xs[0])
    for i in range(k + 1):
        j = k - i
        phi_k += _phi_bilinear(problem, xs[i], ls[j])
        psi_k += _psi_bilinear(problem, ls[i], ls[j])
    for i in range(k + 1):
        for j in range(k + 1 - i):
            l = k - i - j
            phi_k += _phi_trilinear(problem, xs[i], xs[j], ls[l])
            psi_k += _psi_trilinear(problem, ls[i], xs[j], ls[l])
    return Trajectory(grid, -phi_k), Trajectory(grid, -psi_k)


def convergence_report(terms, final_residual=None, stop_reason=None):
    """Norms, contraction ratios, and geometric tail bound for a term list."""
    if not terms:
        raise ValueError("need at least one series term")
    sup_norms = tuple(_term_norm(t) for t in terms)
    ratios = tuple(
        sup_norms[i] / sup_norms[i - 1] if sup_norms[i - 1] > 0 else None
        for i in range(1, len(sup_norms))
    )
    tail = None
    if ratios and ratios[-1] is not None and ratios[-1] < 1:
        r = ratios[-1]
        tail = sup_norms[-1] * r / (1 - r)
    return ConvergenceReport(
        sup_norms=sup_norms,
        ratios=ratios,
        tail_bound=tail,
        final_residual=final_residual,
        stop_reason=stop_reason,
    )


def partial_sum(terms, count):
    """Pointwise sum of the first `count` terms; returns (x, lam) trajectories."""
    if not 1 <= count <= len(terms):
        raise ValueError(f"count must be in 1..{len(terms)}, got {count}")
    grid = terms[0].x_term.grid
    x = sum(t.x_term.values for t in terms[:count])
    lam = sum(t.lam_term.values for t in terms[:count])
    return Trajectory(grid, x), Trajectory(grid, lam)


def hpm_iterate(problem, grid, max_orders=8, tol=1e-8, mode=model.MODE_FULL):
    """Run the series recursion and assemble the solution at p = 1.

    Computes the order-0 term, then for n = 1..max_orders solves the
    forced linear TPBVP with zero boundary data. Stops early when
    s_n < tol * (1 + s_0). When the ratio estimate is >= 1 for two
    consecutive orders the result is flagged divergence-detected (with a
    warning) but the remaining orders are still computed so the diagnostics
    cover everything that was asked for.

    The reported residual always measures the stationarity TPBVP (the
    full-mode equations); `mode` only selects how the control is assembled
    from the summed state and costate.
    """
    if max_orders < 1:
        raise ValueError(f"max_orders must be >= 1, got {max_orders}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if mode not in model.CONTROL_MODES:
        raise ValueError(f"unknown control mode {mode!r}")
    if grid.K % 2 != 0:
        raise ValueError("cost quadrature needs an even number of grid intervals")

    spec_m = assemble_hamiltonian_matrix(problem)
    zero_a = np.zeros(problem.n)
    terms = [initial_guess(problem, grid)]
    s = [_term_norm(terms[0])]
    consecutive_growth = 0
    diverged = False
    stop_reason = STOP_MAX_ORDERS

    for order in range(1, max_orders + 1):
        h1, h2 = series_coefficient_phi_psi(problem, terms, order - 1)
        forcing = Trajectory(grid, -np.hstack([h1.values, h2.values]))
        spec = LinearTpbvpSpec(M=spec_m, Qf=problem.Qf, a=zero_a, c=zero_a, h=forcing)
        x, lam = solve_linear_ti_tpbvp(spec, grid)
        terms.append(SeriesTerm(order=order, x_term=x, lam_term=lam))
        s.append(_term_norm(terms[-1]))
        if s[-2] > 0 and s[-1] / s[-2] >= 1:
            consecutive_growth += 1
            if consecutive_growth >= 2 and not diverged:
                diverged = True
                warnings.warn(
                    "series terms are growing for two consecutive orders; "
                    "the homotopy series is diverging and the partial sums "
                    "are unreliable"
                )
        else:
            consecutive_growth = 0
        if s[-1] < tol * (1 + s[0]):
            stop_reason = STOP_TOLERANCE
            break

    if diverged and stop_reason != STOP_TOLERANCE:
        stop_reason = STOP_DIVERGENCE

    x_sum, lam_sum = partial_sum(terms, len(terms))
    u = Trajectory(grid, model.control_law(problem, x_sum.values, lam_sum.values, mode))
    cost = verify.cost_evaluate(problem, x_sum, u)
    residual = verify.tpbvp_residual(problem, x_sum, lam_sum, model.MODE_FULL)
    report = convergence_report(
        terms,
        final_residual=max(residual.state_sup, residual.costate_sup),
        stop_reason=stop_reason,
    )
    return HpmSolution(
        terms=tuple(terms),
        x_sum=x_sum,
        lam_sum=lam_sum,
        u=u,
        cost=cost,
        report=report,
        mode=mode,
    )
