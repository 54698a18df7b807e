from __future__ import annotations

import numpy as np
import pytest

from cfkac.analytic import AnalyticPoly, TimeVaryingPoly
from cfkac.paths import CoefficientTable, TimeGrid
from cfkac.scenario import McSettings, Scenario


def make_scenario(h, g=(0,), n_cells=8, T=1.0, t0=0.0, x0=0j, sid="test", n_paths=100_000,
                  seed=7, basis_degree=None, **coeffs) -> Scenario:
    """Scenario from scalar or per-cell coefficients and coefficient lists for h and g~."""
    grid = TimeGrid.uniform(t0, T, n_cells)
    co = CoefficientTable(grid, *(coeffs.get(n, 0) for n in CoefficientTable.NAMES))
    gt = TimeVaryingPoly.constant(AnalyticPoly(list(g)), n_cells)
    return Scenario(sid, co, AnalyticPoly(list(h)), gt, complex(x0),
                    McSettings(n_paths, seed, basis_degree))


@pytest.fixture
def scenario_factory():
    return make_scenario


def within(est, target, se, k=3.0, extra=0.0):
    return abs(complex(est) - complex(target)) <= k * se + extra


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
