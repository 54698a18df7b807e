from __future__ import annotations

import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfkac import paths
from cfkac.paths import (CoefficientTable, GridMismatchError, ResourceError, TimeGrid,
                         ito_integral, mean_stderr, sample_increments, simulate_forward,
                         write_paths_csv)

GRID = TimeGrid.uniform(0.0, 1.0, 64)


@pytest.fixture(scope="module")
def batch():
    return sample_increments(11, 100_000, GRID, label="test")


def test_same_seed_bitwise_equal():
    a = sample_increments(5, 1000, GRID)
    b = sample_increments(5, 1000, GRID)
    assert a.dB1.tobytes() == b.dB1.tobytes() and a.dB2.tobytes() == b.dB2.tobytes()
    c = sample_increments(6, 1000, GRID)
    assert not np.array_equal(a.dB1, c.dB1)
    d = sample_increments(5, 1000, GRID, label="other")
    assert not np.array_equal(a.dB1, d.dB1)


def test_prefix_stability_and_workers(monkeypatch):
    n = 2 * paths.BLOCK_SIZE + 5
    monkeypatch.setenv(paths.WORKERS_ENV, "1")
    a = sample_increments(9, n, GRID)
    monkeypatch.setenv(paths.WORKERS_ENV, "3")
    b = sample_increments(9, n, GRID)
    assert a.dB1.tobytes() == b.dB1.tobytes()
    small = sample_increments(9, paths.BLOCK_SIZE, GRID)
    assert np.array_equal(small.dB1, a.dB1[: paths.BLOCK_SIZE])


def test_increment_moments(batch):
    dt = GRID.dt[0]
    n = batch.n_paths
    assert abs(batch.dB1[:, 0].mean()) <= 5 * np.sqrt(dt / n)
    m, se = mean_stderr(batch.dB[:, 0] * batch.dBbar[:, 0])
    assert abs(m - 2 * dt) <= 5 * se
    m, se = mean_stderr(batch.dB[:, 0] ** 2)
    assert abs(m) <= 5 * se


def test_forward_degenerate(batch):
    co = CoefficientTable.constant(GRID)
    X = simulate_forward(0.3 - 1j, co, batch)
    assert X.shape == (batch.n_paths, 65)
    assert np.all(X == 0.3 - 1j)


@pytest.mark.parametrize("sigma,gamma", [(1, 0), (0, 1)])
def test_forward_component_variances(batch, sigma, gamma):
    X = simulate_forward(1j, CoefficientTable.constant(GRID, sigma=sigma, gamma=gamma), batch)
    d = X[:, -1] - 1j
    n = d.size
    for comp in (d.real, d.imag):
        v = comp.var(ddof=1)
        se = np.sqrt(np.var((comp - comp.mean()) ** 2, ddof=1) / n)
        assert abs(v - 1.0) <= 5 * se
    if gamma:
        assert np.allclose(d, batch.dBbar.sum(1))


def test_forward_grid_mismatch(batch):
    co = CoefficientTable.constant(TimeGrid.uniform(0, 1, 32), sigma=1)
    with pytest.raises(GridMismatchError):
        simulate_forward(0, co, batch)


def test_ito_integral_examples(batch):
    assert np.all(ito_integral(0, batch) == 0)
    assert np.allclose(ito_integral(1, batch), batch.dB.sum(1))
    c = 0.7 - 1.3j
    m, se = mean_stderr(np.abs(ito_integral(c, batch)) ** 2)
    assert abs(m - 2 * abs(c) ** 2) <= 5 * se
    assert np.allclose(ito_integral(1, batch, "dBbar"), batch.dBbar.sum(1))
    with pytest.raises(ValueError):
        ito_integral(1, batch, "dt")


def test_ito_integral_callable_sees_only_the_past(batch):
    X = simulate_forward(0, CoefficientTable.constant(GRID, sigma=1), batch)
    seen = []

    def f(k, past):
        seen.append(past.shape[1])
        return past[:, -1]

    v = ito_integral(f, batch, X=X)
    assert seen == list(range(1, 65))
    assert np.allclose(v, (X[:, :-1] * batch.dB).sum(1))


def test_resource_limit():
    with pytest.raises(ResourceError):
        sample_increments(1, 10**9, GRID)
    with pytest.raises(ValueError):
        sample_increments(1, 0, GRID)


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 0.5, 0.5]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([1.0]))
    g = TimeGrid(np.array([0.0, 0.1, 0.5, 1.0]))
    assert g.cell_index(0.3) == 1 and g.cell_index(1.0) == 2 and g.node_index(0.5) == 2
    with pytest.raises(ValueError):
        g.node_index(0.3)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**64 - 1), st.sampled_from([1, 2, 4, 8]))
def test_coarsen_preserves_brownian_endpoints(seed, f):
    b = sample_increments(seed, 50, TimeGrid.uniform(0, 2.0, 8), label="prop")
    c = b.coarsen(f)
    assert c.grid.n_cells == 8 // f
    assert np.allclose(c.dB.sum(1), b.dB.sum(1), rtol=0, atol=1e-12)
    co = CoefficientTable.constant(b.grid, sigma=0.3 + 1j, gamma=-0.5)
    assert np.allclose(simulate_forward(1, co, b)[:, -1],
                       simulate_forward(1, co.coarsen(f), c)[:, -1], atol=1e-12)


def test_paths_csv(tmp_path, batch):
    X = simulate_forward(0, CoefficientTable.constant(GRID, sigma=1), batch)
    p = tmp_path / "x.csv"
    write_paths_csv(p, X, GRID, max_paths=2)
    lines = p.read_text().splitlines()
    assert lines[0] == "path_id,k,t_k,Re X,Im X" and len(lines) == 1 + 2 * 65
    assert float(lines[-1].split(",")[3]) == X[1, -1].real
