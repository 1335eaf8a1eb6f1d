import time

import numpy as np
import pytest

import bilinopt as bo

REFERENCE_TIMINGS = {}


@pytest.fixture
def reactor():
    return bo.reactor_problem()


@pytest.fixture
def weak_reactor():
    """Reactor with coupling scaled into the series' convergence region."""
    return bo.reactor_problem().scaled_coupling(0.15)


@pytest.fixture(scope="session")
def reactor_reference():
    """Shooting reference for the full reactor on a fine grid (slow, shared)."""
    problem = bo.reactor_problem()
    grid = bo.TimeGrid(problem.t0, problem.tf, 3000)
    started = time.perf_counter()
    ref = bo.reference_solve(problem, grid)
    REFERENCE_TIMINGS["reactor"] = time.perf_counter() - started
    return ref


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
