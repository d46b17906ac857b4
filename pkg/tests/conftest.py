"""Shared fixtures.

The expensive sweep products (101x101 phase-diagram grids, the four-N
finite-size scan) are computed once per session and shared between the
module tests and the acceptance suite.
"""

import numpy as np
import pytest

from bistab import SystemParams, finite_size_scan, phase_diagram_grid
from bistab.kernels import warmup

N_GRID = (5e3, 1e4, 1e5, 1e6)


@pytest.fixture(scope="session", autouse=True)
def _compiled():
    # pay the JIT cost up front so per-test timings are meaningful
    warmup()


@pytest.fixture(scope="session")
def baseline():
    """Reference parameter point: symmetric rates, resonant cavities,
    red-detuned atoms, N = 5000, undriven."""
    return SystemParams()


@pytest.fixture(scope="session")
def scan_arcs(baseline):
    """Finite-size scan at radius 0.29, 721 angles, N in N_GRID."""
    return finite_size_scan(baseline, N_GRID, radius=0.29, n_phi=721)


@pytest.fixture(scope="session")
def grids(baseline):
    """101x101 drive grids keyed by atom number (computed lazily)."""
    cache = {}

    def get(N):
        if N not in cache:
            cache[N] = phase_diagram_grid(baseline.with_atom_number(N),
                                          resolution=101)
        return cache[N]

    return get


@pytest.fixture()
def draw_params(baseline):
    """Random admissible parameter draw: baseline rates, eta in (0, 5],
    N from the four-decade grid. Shared by the census-style tests."""

    def draw(rng):
        N = float(rng.choice(N_GRID))
        e1, e2 = rng.uniform(0.0, 5.0, 2)
        return baseline.with_atom_number(N).with_drive(e1, e2)

    return draw
