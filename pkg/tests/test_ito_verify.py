from __future__ import annotations

import numpy as np
import pytest

from cfkac.analytic import AnalyticPoly, SpaceTimePoly
from cfkac.ito_verify import expected_gap, ito_batch, ito_residual, ito_samples, martingale_gap
from cfkac.paths import CoefficientTable, TimeGrid

GRID = TimeGrid.uniform(0.0, 1.0, 64)
SQ = AnalyticPoly([0, 0, 1])


def richardson(F, co, batch, corr):
    fine = ito_residual(F, co, 0.5, batch=batch, include_correction=corr)
    coarse = ito_residual(F, co.coarsen(2), 0.5, batch=batch.coarsen(2), include_correction=corr)
    return fine, 2 * abs(fine.mean_residual - coarse.mean_residual)


def test_x_independent_F_is_exact():
    co = CoefficientTable.constant(GRID, sigma=1, gamma=1j)
    F = SpaceTimePoly([[1.0], [0.5j], [0, 0], [2.0]])  # 1 + 0.5i t + 2 t^3
    res, _ = ito_samples(F, co, 0.2, ito_batch(GRID, 1000, 1), include_correction=False)
    assert np.max(np.abs(res)) <= 1e-13


def test_conformal_case_has_no_gap():
    co = CoefficientTable.constant(GRID, sigma=1)
    rep, cdt = richardson(SQ, co, ito_batch(GRID, 100_000, 2), False)
    assert abs(rep.mean_residual) <= 3 * rep.stderr + cdt
    assert rep.correction_magnitude == 0


def test_gap_detected_and_closed():
    co = CoefficientTable.constant(GRID, sigma=1, gamma=1j)
    b = ito_batch(GRID, 100_000, 3, "gap")
    off = ito_residual(SQ, co, 0, batch=b, include_correction=False)
    assert abs(off.mean_residual - (-4j)) <= 3 * off.stderr
    assert expected_gap(SQ, co) == pytest.approx(-4j)
    on, cdt = richardson(SQ, co, b, True)
    assert abs(on.mean_residual) <= 3 * on.stderr + cdt
    assert off.correction_magnitude == pytest.approx(4.0)


def test_switching_coefficients():
    sig = np.where(GRID.times[:-1] < 0.5, 0.8, 0)
    gam = np.where(GRID.times[:-1] < 0.5, 0, 0.6j)
    co = CoefficientTable(GRID, sig, gam, 0, 0, 0)
    F = SpaceTimePoly([[0, 0, 0, 1], [0, 1]])
    rep, cdt = richardson(F, co, ito_batch(GRID, 100_000, 4), False)
    assert abs(rep.mean_residual) <= 3 * rep.stderr + cdt


def test_martingale_gap_examples():
    co = CoefficientTable.constant(GRID, sigma=1)
    g, se = martingale_gap(SQ, co, 1 + 1j, n_paths=100_000, seed=5)
    assert abs(g) <= 3 * se
    g, se = martingale_gap(SQ, CoefficientTable.constant(GRID), 1 + 1j, n_paths=10, seed=5)
    assert g == 0
    g, se = martingale_gap(SQ, CoefficientTable.constant(GRID, sigma=1, gamma=1j), 0,
                           n_paths=100_000, seed=6)
    assert abs(g - 4j) <= 3 * se


def test_expected_gap_needs_quadratic_F():
    with pytest.raises(ValueError):
        expected_gap(AnalyticPoly([0, 0, 0, 1]), CoefficientTable.constant(GRID, sigma=1))


def test_report_row_matches_header():
    from cfkac.ito_verify import ITO_CSV_HEADER
    rep = ito_residual(SQ, CoefficientTable.constant(GRID, sigma=1), 0, n_paths=100, seed=1)
    assert len(rep.csv_row()) == len(ITO_CSV_HEADER)
