"""Pydantic schemas for problem files, run configuration, and the HTTP API."""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .model import BilinearProblem

Matrix = list[list[float]]


class ProblemFileModel(BaseModel):
    """JSON problem document; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    n: int = Field(gt=0)
    m: int = Field(gt=0)
    A: Matrix
    B: Matrix
    N: list[Matrix]
    Q: Matrix
    Qf: Matrix
    R: Matrix
    x0: list[float]
    t0: float
    tf: float

    @model_validator(mode="after")
    def _check_shapes(self):
        def shape_of(name, mat, rows, cols):
            if len(mat) != rows or any(len(r) != cols for r in mat):
                raise ValueError(f"{name}: expected a {rows}x{cols} matrix")

        shape_of("A", self.A, self.n, self.n)
        shape_of("B", self.B, self.n, self.m)
        if len(self.N) != self.n:
            raise ValueError(f"N: expected {self.n} coupling matrices, got {len(self.N)}")
        for j, Nj in enumerate(self.N):
            shape_of(f"N[{j}]", Nj, self.n, self.m)
        shape_of("Q", self.Q, self.n, self.n)
        shape_of("Qf", self.Qf, self.n, self.n)
        shape_of("R", self.R, self.m, self.m)
        if len(self.x0) != self.n:
            raise ValueError(f"x0: expected length {self.n}, got {len(self.x0)}")
        if not self.t0 < self.tf:
            raise ValueError(f"tf: horizon must satisfy t0 < tf, got [{self.t0}, {self.tf}]")
        return self

    def to_problem(self):
        """Build the validated numerical problem (PSD/PD checks happen there)."""
        return BilinearProblem.create(
            A=self.A, B=self.B, N=self.N, Q=self.Q, Qf=self.Qf, R=self.R,
            x0=self.x0, t0=self.t0, tf=self.tf,
        )

    @staticmethod
    def from_problem(problem):
        return ProblemFileModel(
            n=problem.n,
            m=problem.m,
            A=problem.A.tolist(),
            B=problem.B.tolist(),
            N=[Nj.tolist() for Nj in problem.N],
            Q=problem.Q.tolist(),
            Qf=problem.Qf.tolist(),
            R=problem.R.tolist(),
            x0=problem.x0.tolist(),
            t0=problem.t0,
            tf=problem.tf,
        )


class RunConfigModel(BaseModel):
    """Solver configuration shared by the CLI and the service."""

    model_config = ConfigDict(extra="forbid")

    orders: int = Field(default=8, ge=1)
    grid_steps: int = Field(default=300, ge=2)
    tol: float = Field(default=1e-8, gt=0)
    control_mode: Literal["full", "linear-gain"] = "full"

    @field_validator("grid_steps")
    @classmethod
    def _force_even(cls, v):
        # the cost quadrature needs an even interval count
        return v + 1 if v % 2 else v


class ResidualModel(BaseModel):
    state_sup: float
    state_l2: float
    costate_sup: float
    costate_l2: float
    boundary_t0: float
    boundary_tf: float
    floor_estimate: float
    overall_sup: float

    @staticmethod
    def from_report(report):
        return ResidualModel(
            state_sup=report.state_sup,
            state_l2=report.state_l2,
            costate_sup=report.costate_sup,
            costate_l2=report.costate_l2,
            boundary_t0=report.boundary_t0,
            boundary_tf=report.boundary_tf,
            floor_estimate=report.floor_estimate,
            overall_sup=report.overall_sup,
        )


class DiagnosticsModel(BaseModel):
    orders_computed: int
    grid_steps: int
    control_mode: str
    sup_norms: list[float]
    ratios: list[Optional[float]]
    tail_bound: Optional[float]
    residual: ResidualModel
    cost: float
    stop_reason: str


class TrajectoryTableModel(BaseModel):
    t: list[float]
    x: list[list[float]]
    lam: list[list[float]]
    u: list[list[float]]


class SolveRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    problem: ProblemFileModel
    config: RunConfigModel = RunConfigModel()


class SolveResponse(BaseModel):
    diagnostics: DiagnosticsModel
    trajectories: TrajectoryTableModel


class VerifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    problem: ProblemFileModel
    trajectories: TrajectoryTableModel
    threshold: float = Field(default=1e-3, gt=0)
    against_reference: bool = False


class ReferenceComparisonModel(BaseModel):
    x_sup_diff: float
    lam_sup_diff: float
    u_sup_diff: float
    cost_reference: float
    newton_iterations: int
    defect_norm: float


class VerifyResponse(BaseModel):
    residual: ResidualModel
    cost: float
    threshold: float
    ok: bool
    comparison: Optional[ReferenceComparisonModel] = None


class ReactorDemoRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: RunConfigModel = RunConfigModel(orders=3)
