"""Shared fixtures: the benchmarks, each solved once per session."""

from pathlib import Path

import pytest

from locopt import benchmarks
from locopt.economy import build_equilibrium, localized_pareto
from locopt.vopt import SolveConfig, solve_localization

PROBLEMS_DIR = Path(__file__).resolve().parent.parent / "problems"


@pytest.fixture(scope="session")
def plane_loc():
    return benchmarks.plane_localization()


@pytest.fixture(scope="session")
def plane_cert(plane_loc):
    return solve_localization(plane_loc, [0.5, 0.5], SolveConfig(seed=0))


@pytest.fixture(scope="session")
def curved_loc():
    return benchmarks.curved_localization()


@pytest.fixture(scope="session")
def curved_cert(curved_loc):
    return solve_localization(curved_loc, [0.5, 0.5], SolveConfig(seed=0))


@pytest.fixture(scope="session")
def linear_eco():
    return benchmarks.linear_exchange()


@pytest.fixture(scope="session")
def disposal_eco():
    return benchmarks.quadratic_disposal_exchange()


@pytest.fixture(scope="session")
def linear_pareto(linear_eco):
    x0 = benchmarks.standard_allocation()
    return localized_pareto(linear_eco, x0, 0.5, [0.5, 0.5], SolveConfig(seed=0))


@pytest.fixture(scope="session")
def linear_equilibrium(linear_eco, linear_pareto):
    return build_equilibrium(linear_eco, benchmarks.standard_allocation(), linear_pareto)


@pytest.fixture(scope="session")
def disposal_pareto(disposal_eco):
    x0 = benchmarks.standard_allocation()
    return localized_pareto(disposal_eco, x0, 0.5, [0.5, 0.5], SolveConfig(seed=0))


@pytest.fixture(scope="session")
def disposal_equilibrium(disposal_eco, disposal_pareto):
    return build_equilibrium(disposal_eco, benchmarks.standard_allocation(), disposal_pareto)


@pytest.fixture()
def problems_dir():
    return PROBLEMS_DIR
