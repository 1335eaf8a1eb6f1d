"""Quadratic optimal control of bilinear systems.

The optimality system of a finite-horizon bilinear-quadratic problem is a
nonlinear two-point boundary value problem. This package solves it as a
series of linear time-invariant boundary value problems, each integrated
exactly with matrix exponentials, and cross-checks the result with an
independent single-shooting reference solver.
"""
__version__ = "0.1.0"

from .errors import (
    BilinoptError,
    ConvergenceFailureError,
    DegenerateBoundaryError,
    GridMismatchError,
    NumericRangeError,
    ProblemValidationError,
    SimulationDivergenceError,
)
from .hpm import (
    ConvergenceReport,
    HpmSolution,
    SeriesTerm,
    convergence_report,
    hpm_iterate,
    initial_guess,
    partial_sum,
    series_coefficient_phi_psi,
)
from .model import (
    MODE_FULL,
    MODE_LINEAR_GAIN,
    BilinearProblem,
    OperatorSplit,
    control_law,
    eval_phi,
    eval_psi,
    hamiltonian,
    n_of_x,
    operator_split,
)
from .reactor import reactor_problem
from .tpbvp import (
    HamiltonianMatrix,
    LinearTpbvpSpec,
    TimeGrid,
    Trajectory,
    assemble_hamiltonian_matrix,
    expm,
    propagate_step,
    solve_linear_ti_tpbvp,
)
from .verify import (
    ReferenceSolution,
    ResidualReport,
    cost_evaluate,
    forward_simulate,
    reference_solve,
    tpbvp_residual,
)

__all__ = [
    "BilinearProblem",
    "BilinoptError",
    "ConvergenceFailureError",
    "ConvergenceReport",
    "DegenerateBoundaryError",
    "GridMismatchError",
    "HamiltonianMatrix",
    "HpmSolution",
    "LinearTpbvpSpec",
    "MODE_FULL",
    "MODE_LINEAR_GAIN",
    "NumericRangeError",
    "OperatorSplit",
    "ProblemValidationError",
    "ReferenceSolution",
    "ResidualReport",
    "SeriesTerm",
    "SimulationDivergenceError",
    "TimeGrid",
    "Trajectory",
    "assemble_hamiltonian_matrix",
    "control_law",
    "convergence_report",
    "cost_evaluate",
    "eval_phi",
    "eval_psi",
    "expm",
    "forward_simulate",
    "hamiltonian",
    "hpm_iterate",
    "initial_guess",
    "n_of_x",
    "operator_split",
    "partial_sum",
    "propagate_step",
    "reactor_problem",
    "reference_solve",
    "series_coefficient_phi_psi",
    "solve_linear_ti_tpbvp",
    "tpbvp_residual",
]
