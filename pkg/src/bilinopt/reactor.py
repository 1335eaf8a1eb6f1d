"""Built-in chemical reactor benchmark problem.

A two-state bilinear reactor model (temperature and concentration
deviations) with a single control channel that multiplies the first state,
driven toward the origin over a three-second horizon under heavy terminal
weighting. Bundled as the package's demonstration problem.
"""
import numpy as np

from .model import BilinearProblem


def reactor_problem():
    return BilinearProblem.create(
        A=np.array([[13 / 6, 5 / 12], [-50 / 3, -8 / 3]]),
        B=np.array([[-1 / 8], [0.0]]),
        N=[np.array([[-1.0], [0.0]]), np.array([[0.0], [0.0]])],
        Q=np.diag([10.0, 10.0]),
        Qf=np.diag([1000.0, 1000.0]),
        R=np.array([[1.0]]),
        x0=np.array([0.15, 0.0]),
        t0=0.0,
        tf=3.0,
    )
