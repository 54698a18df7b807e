from __future__ import annotations

import numpy as np
import pytest

from cfkac.bsde_mc import (RegressionError, adjoint_weights, bsde_batch, fd_gradient,
                           fit_conditional, gradient_adjoint, solve_euler_regression,
                           solve_y_adjoint, verify_prop31, verify_y_analyticity)
from cfkac.paths import CoefficientTable, TimeGrid, mean_stderr, sample_increments
from cfkac.pde_char import solve_u, solve_ux

from conftest import make_scenario, within

GRID = TimeGrid.uniform(0.0, 1.0, 16)


def test_weights_trivial_and_deterministic():
    b = sample_increments(1, 500, GRID)
    assert np.all(adjoint_weights(CoefficientTable.constant(GRID), b) == 1)
    M = adjoint_weights(CoefficientTable.constant(GRID, alpha=0.5 - 1j), b)
    assert np.allclose(M, np.exp((0.5 - 1j) * GRID.times)[None, :], rtol=1e-14)


def test_weights_unit_mean():
    b = sample_increments(2, 100_000, GRID)
    M = adjoint_weights(CoefficientTable.constant(GRID, beta=1), b)
    m, se = mean_stderr(M[:, -1])
    assert within(m, 1, se, k=5)


def test_weights_overflow():
    b = sample_increments(1, 10, GRID)
    with pytest.raises(OverflowError):
        adjoint_weights(CoefficientTable.constant(GRID, alpha=1000), b)


def test_adjoint_examples():
    sc = make_scenario(h=[0, 0, 1], sigma=1, x0=1, n_cells=16)
    est = solve_y_adjoint(sc)
    assert within(est.y, 1, est.y_stderr)
    sc = make_scenario(h=[0, 1], sigma=1, beta=1, n_cells=16)
    est = solve_y_adjoint(sc)
    assert within(est.y, 1, est.y_stderr)
    a = -0.4 + 0.3j
    sc = make_scenario(h=[0, 1], sigma=1, alpha=a, x0=0.5 + 1j, n_cells=16)
    est = solve_y_adjoint(sc, t=0.25)
    assert within(est.y, np.exp(a * 0.75) * (0.5 + 1j), est.y_stderr)


def test_adjoint_intermediate_start_matches_pde():
    sc = make_scenario(h=[1, -0.5, 0.3j], g=[0.2, 0.1], sigma=0.6j, alpha=0.3, beta=0.5 - 0.2j,
                       theta=0.4, n_cells=16)
    est = solve_y_adjoint(sc, t=0.5, x=0.2)
    assert within(est.y, solve_u(sc, 0.5, 0.2), est.y_stderr)
    with pytest.raises(ValueError):
        solve_y_adjoint(sc, t=0.3)  # not a knot


def test_euler_martingale_representation():
    sc = make_scenario(h=[0, 1], sigma=1, x0=0.3, n_cells=16)
    f = solve_euler_regression(sc)
    for k in (0, 5, 15):
        xs = f.x_mean[k] + f.x_sd[k] * np.array([0, 1, 1j])
        assert np.allclose(f.y_at(k, xs), xs, rtol=0.05, atol=0.05)
        assert np.allclose(f.z_at(k, xs), 1, atol=0.05)
        assert np.allclose(f.tau_at(k, xs), 0, atol=0.05)


def test_euler_deterministic_recursion():
    a = 0.4
    sc = make_scenario(h=[0, 1], g=[1], alpha=a, x0=2, n_cells=16, n_paths=200)
    f = solve_euler_regression(sc)
    y = sc.h(2)
    for k in range(15, -1, -1):  # explicit backward ODE oracle
        y = y * (1 + a * GRID.dt[k]) + GRID.dt[k]
    assert f.y0 == pytest.approx(y, rel=1e-12)
    assert abs(f.z0) <= 1e-12 and abs(f.tau0) <= 1e-12
    exact = solve_u(sc, 0.0, 2)
    assert abs(f.y0 - exact) <= 2 * abs(exact) * a * a * GRID.dt[0]  # O(dt)


def test_euler_matches_pde_with_richardson():
    sc = make_scenario(h=[1, -0.5, 0.3j, 0.2], g=[0.5, 0.2 - 0.1j], sigma=0.5 + 0.2j,
                       alpha=-0.3 + 0.4j, beta=0.6 - 0.2j, theta=0.3j, x0=0.2 + 0.1j, n_cells=32)
    b = bsde_batch(sc)
    f = solve_euler_regression(sc, batch=b)
    fc = solve_euler_regression(sc.coarsen(2), batch=b.coarsen(2))
    u = solve_u(sc, 0.0, sc.x0)
    assert abs(f.y0 - u) <= 3 * f.y0_stderr + 2 * abs(f.y0 - fc.y0)


def test_regression_guards():
    rng = np.random.default_rng(0)
    X = rng.normal(size=30) + 0j
    with pytest.raises(RegressionError):
        fit_conditional(X, X[:, None], 5)  # 30 paths < 10 per basis function
    X = np.full(1000, 0.5 + 0j)
    fit = fit_conditional(X, np.ones((1000, 1)), 4)  # zero spread falls back to constants
    assert fit.degree == 0 and fit(0.5) == pytest.approx(1)
    X = np.concatenate([np.zeros(999), [1.0]]) + 0j
    with pytest.raises(RegressionError):
        fit_conditional(X, X[:, None], 6)


def test_regression_recovers_polynomial():
    rng = np.random.default_rng(1)
    X = rng.normal(size=5000) + 1j * rng.normal(size=5000)
    Y = 1 - 2j * X + 0.5 * X**3
    fit = fit_conditional(X, Y[:, None], 3)
    assert np.allclose(fit(np.array([0, 1j, 2])), 1 - 2j * np.array([0, 1j, 2]) + 0.5 * np.array([0, 1j, 2]) ** 3)


def test_gradient_examples():
    sc = make_scenario(h=[0, 0, 1], sigma=1, x0=1 + 1j, n_cells=16)
    g, se = gradient_adjoint(sc)
    assert within(g, 2 + 2j, se)
    sc0 = make_scenario(h=[3], g=[1j], sigma=1, alpha=0.2, n_cells=16, n_paths=1000)
    g, se = gradient_adjoint(sc0)
    assert g == 0
    sc = make_scenario(h=[1, -0.5, 0.3j, 0.2], g=[0.5, 0.2], sigma=0.5, alpha=-0.3, beta=0.6,
                       theta=0.3j, x0=0.2, n_cells=16)
    b = bsde_batch(sc)
    g, gse = gradient_adjoint(sc, batch=b)
    fd, fse = fd_gradient(sc, batch=b)
    assert abs(g - fd) <= 3 * np.hypot(gse, fse) + 1e-4
    assert within(g, solve_ux(sc, 0.0, sc.x0), gse)


def test_prop31_examples():
    sc = make_scenario(h=[0, 1], sigma=1, n_cells=16)
    rep = verify_prop31(sc)
    assert rep.rel_z <= 0.05 and rep.rel_tau <= 0.05
    sc = make_scenario(h=[0, 0, 1], gamma=1, x0=0.2, n_cells=16)
    rep = verify_prop31(sc)
    assert rep.rel_z <= 0.05 and rep.rel_tau <= 0.05
    with pytest.raises(ValueError):
        verify_prop31(make_scenario(h=[0, 1], sigma=1, gamma=1j))


def test_analyticity_examples():
    sc = make_scenario(h=[0, 0, 1], alpha=0.3, g=[1, 2], x0=1, n_cells=16, n_paths=100)
    assert verify_y_analyticity(sc).residual <= 1e-6
    sc = make_scenario(h=[0, 0, 1], sigma=1, x0=1, n_cells=16)
    rep = verify_y_analyticity(sc)
    assert rep.residual <= 3 * rep.stderr + 1e-4


def test_analyticity_negative_control_is_recorded():
    # sigma*gamma != 0: diagnostic only, the value is reported but not bounded
    sc = make_scenario(h=[0, 0, 1], sigma=1, gamma=1j, x0=1, n_cells=16, n_paths=20_000)
    rep = verify_y_analyticity(sc)
    assert np.isfinite(rep.residual) and rep.jacobian.shape == (2, 2)


def test_same_seed_same_estimate():
    sc = make_scenario(h=[0, 1, 1], sigma=0.5, alpha=0.1, n_cells=8, n_paths=5000)
    a, b = solve_euler_regression(sc), solve_euler_regression(sc)
    assert a.y0 == b.y0 and a.z0 == b.z0
    assert solve_y_adjoint(sc).y == solve_y_adjoint(sc).y
