import math

import numpy as np
import pytest

from ddalab.config import ExperimentConfig
from ddalab.nse2d.core import NseParams, kolmogorov_forcing, random_field
from ddalab.nse2d.grid import FourierGrid

_CRITERIA = {}
N_CRITERIA = 11


_SELECTED = []


def pytest_collection_modifyitems(items):
    _SELECTED[:] = [it for it in items if it.module.__name__.endswith("test_acceptance")]


def pytest_terminal_summary(terminalreporter):
    if not _SELECTED:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        ok, detail = _CRITERIA.get(n, (False, "no result recorded"))
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def report():
    """``report(n, ok, detail)`` records an acceptance outcome and returns ``ok``."""
    def _record(n, ok, detail):
        ok = bool(ok)
        prev = _CRITERIA.get(n)
        if prev is not None:
            ok = ok and prev[0]
            detail = prev[1] + "; " + detail
        _CRITERIA[n] = (ok, detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return _record


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def grid64():
    return FourierGrid(64, 2 * math.pi)


@pytest.fixture(scope="session")
def grid16():
    return FourierGrid(16, 2 * math.pi)


@pytest.fixture
def random_u(grid64, rng):
    def make(n=1):
        return [random_field(grid64, rng, norm=1.0) for _ in range(n)]
    return make


@pytest.fixture(scope="session")
def small_nse():
    """A cheap 16x16 laminar-ish configuration for solver tests."""
    grid = FourierGrid(16, 2 * math.pi)
    f = kolmogorov_forcing(grid, 1.0, kind="shell")
    return NseParams(0.1, f, grid)


@pytest.fixture(scope="session")
def nse_cfg():
    """Default desk-scale Navier-Stokes experiment."""
    return ExperimentConfig().replace("experiment", system="nse2d").resolved()


@pytest.fixture(scope="session")
def lorenz_cfg():
    return ExperimentConfig().resolved()
