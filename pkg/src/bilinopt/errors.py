"""Exception types shared across the package."""


class BilinoptError(Exception):
    """Base class for all package-specific errors."""


class ProblemValidationError(BilinoptError, ValueError):
    """A problem field failed validation. Carries the offending field name."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class GridMismatchError(BilinoptError, ValueError):
    """Trajectories or forcings are not sampled on the expected grid."""


class NumericRangeError(BilinoptError, ArithmeticError):
    """A numerical kernel overflowed or produced non-finite values."""


class DegenerateBoundaryError(BilinoptError, RuntimeError):
    """The linear boundary-value system is singular or near-singular."""

    def __init__(self, condition_number):
        self.condition_number = condition_number
        super().__init__(
            "degenerate boundary-value problem: boundary matrix condition "
            f"number {condition_number:.3e} exceeds 1e12"
        )


class SimulationDivergenceError(BilinoptError, RuntimeError):
    """Forward simulation produced a non-finite state."""

    def __init__(self, node_index):
        self.node_index = node_index
        super().__init__(f"state became non-finite at grid node {node_index}")


class ConvergenceFailureError(BilinoptError, RuntimeError):
    """The shooting solver failed to meet its defect tolerance.

    Carries the best iterate found so callers can inspect how close the
    solver got.
    """

    def __init__(self, message, best_costate=None, best_defect=None):
        self.best_costate = best_costate
        self.best_defect = best_defect
        super().__init__(message)
