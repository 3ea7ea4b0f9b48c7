"""Shared fixtures for the slow end-to-end runs, executed once per session.

The certified-approximation matrix and the uniform-width experiment are
each run twice so the determinism test can compare serialized artifacts
byte for byte without paying for a third run.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from lipnets import (
    ApproximationProblem,
    BoxDomain,
    approximate,
    builtin_target,
    uniform_width_experiment,
)

MATRIX_TARGETS = ("abs-shift", "min2d", "sin-scaled")
MATRIX_EPSILONS = (0.4, 0.2, 0.1)
MATRIX_MAX_WIDTH = 256
UNIFORM_MAX_WIDTH = 128


def make_problem(
    name: str, epsilon: float, seed: int = 0, activation: str = "relu"
) -> ApproximationProblem:
    spec = builtin_target(name)
    return ApproximationProblem(
        target=spec.make(seed),
        lipschitz_bound=spec.lipschitz_bound,
        domain=spec.domain,
        epsilon=epsilon,
        norm=spec.norm,
        activation=activation,
        seed=seed,
    )


def _run_matrix() -> dict:
    results = {}
    for name in MATRIX_TARGETS:
        for eps in MATRIX_EPSILONS:
            start = time.perf_counter()
            report = approximate(make_problem(name, eps), MATRIX_MAX_WIDTH)
            elapsed = time.perf_counter() - start
            results[(name, eps)] = (report, elapsed)
    return results


@pytest.fixture(scope="session")
def approximation_matrix() -> dict:
    """Pipeline reports for 3 builtin targets x 3 accuracy goals."""
    return _run_matrix()


@pytest.fixture(scope="session")
def approximation_matrix_rerun() -> dict:
    """Same runs again, for artifact byte-identity checks."""
    return _run_matrix()


def _run_uniform():
    box = BoxDomain(np.zeros(1), np.ones(1))
    start = time.perf_counter()
    result = uniform_width_experiment(
        1.0,
        box,
        box,
        0.5,
        activation="relu",
        seed=0,
        radius_trials=500,
        max_width=UNIFORM_MAX_WIDTH,
    )
    elapsed = time.perf_counter() - start
    return result, elapsed


@pytest.fixture(scope="session")
def uniform_experiment():
    """One-width-serves-all experiment at eps = 0.5 on the unit interval."""
    return _run_uniform()


@pytest.fixture(scope="session")
def uniform_experiment_rerun():
    return _run_uniform()
