"""Monte Carlo check of the complex Ito formula along the forward process.

For F analytic in x and ``dX = sigma dB + gamma dB~``, the pairings
``dB dB = 0``, ``dB~ dB~ = 0``, ``dB dB~ = 2 dt`` give

    dF(t, X) = F_t dt + F_x dX + 2 sigma gamma F_xx dt.

The last term vanishes only when the complex product ``sigma*gamma`` does;
``include_correction`` toggles it so both versions can be measured.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic import AnalyticPoly, SpaceTimePoly, diff_poly, eval_poly
from .paths import (CoefficientTable, PathBatch, TimeGrid, mean_stderr, sample_increments,
                    simulate_forward)


@dataclass
class ItoReport:
    mean_residual: complex
    stderr: float
    correction_magnitude: float
    n_paths: int
    dt: float
    include_correction: bool
    scenario_id: str = ""

    def csv_row(self) -> list:
        return [self.scenario_id, self.include_correction, self.mean_residual.real,
                self.mean_residual.imag, self.stderr, self.correction_magnitude,
                self.n_paths, self.dt]


ITO_CSV_HEADER = ["scenario_id", "include_correction", "Re mean", "Im mean", "stderr",
                  "correction_magnitude", "n_paths", "dt"]


def ito_batch(grid: TimeGrid, n_paths: int, seed: int, scenario_id: str = "") -> PathBatch:
    return sample_increments(seed, n_paths, grid, label=f"ito_verify/{scenario_id}")


def _as_spacetime(F) -> SpaceTimePoly:
    return SpaceTimePoly.from_poly(F) if isinstance(F, AnalyticPoly) else F


def ito_samples(F, coeffs: CoefficientTable, x0: complex, batch: PathBatch,
                include_correction: bool):
    """Per-path residual and per-path integrated ``|2 sigma gamma F_xx| dt``.

    residual = [F(t0, x0) + sum_k (F(t_{k+1}, X_k) - F(t_k, X_k))
                + F_x(t_k, X_k) dX_k + 2 sigma_k gamma_k F_xx(t_k, X_k) dt_k]
               - F(T, X_T)

    i.e. the Ito expansion minus the realised value. The time increment is
    taken at frozen ``X_k``, so an x-independent F telescopes exactly.
    """
    F = _as_spacetime(F)
    grid = coeffs.grid
    t, dt = grid.times, grid.dt
    X = simulate_forward(x0, coeffs, batch)
    dX = np.diff(X, axis=1)
    pred = np.full(batch.n_paths, F(t[0], x0), dtype=np.complex128)
    corr_mag = np.zeros(batch.n_paths)
    sg = coeffs.sigma * coeffs.gamma
    for k in range(grid.n_cells):
        Fk = F.at(t[k])
        Xk = X[:, k]
        pred += F(t[k + 1], Xk) - eval_poly(Fk, Xk)
        pred += eval_poly(diff_poly(Fk, 1), Xk) * dX[:, k]
        if sg[k] != 0:
            c = 2 * sg[k] * eval_poly(diff_poly(Fk, 2), Xk) * dt[k]
            corr_mag += np.abs(c)
            if include_correction:
                pred += c
    return pred - F(t[-1], X[:, -1]), corr_mag


def ito_residual(F, coeffs: CoefficientTable, x0: complex, grid: TimeGrid | None = None,
                 n_paths: int = 100_000, seed: int = 0, include_correction: bool = True,
                 batch: PathBatch | None = None, scenario_id: str = "") -> ItoReport:
    grid = coeffs.grid if grid is None else grid
    if batch is None:
        batch = ito_batch(grid, n_paths, seed, scenario_id)
    res, mag = ito_samples(F, coeffs, x0, batch, include_correction)
    m, se = mean_stderr(res)
    return ItoReport(complex(m), se, float(mag.mean()), batch.n_paths, float(grid.dt.max()),
                     include_correction, scenario_id)


def martingale_gap(h: AnalyticPoly, coeffs: CoefficientTable, x0: complex, grid=None,
                   n_paths: int = 100_000, seed: int = 0, batch: PathBatch | None = None,
                   scenario_id: str = ""):
    """``E[h(X_T)] - h(x0)`` with its standard error."""
    grid = coeffs.grid if grid is None else grid
    if batch is None:
        batch = ito_batch(grid, n_paths, seed, scenario_id)
    X = simulate_forward(x0, coeffs, batch)
    m, se = mean_stderr(eval_poly(h, X[:, -1]) - eval_poly(h, x0))
    return complex(m), se


def expected_gap(F, coeffs: CoefficientTable) -> complex:
    """Mean residual without the correction, ``-sum_k 2 sigma_k gamma_k F_xx(t_k) dt_k``.

    Closed form only when ``F_xx`` is free of x, i.e. F has x-degree <= 2.
    """
    F = _as_spacetime(F)
    if F.coeffs.shape[1] > 3 and np.any(F.coeffs[:, 3:] != 0):
        raise ValueError("expected_gap needs F of x-degree <= 2")
    t, dt = coeffs.grid.times[:-1], coeffs.grid.dt
    fxx = np.array([complex(eval_poly(diff_poly(F.at(tk), 2), 0.0)) for tk in t])
    return complex(-np.sum(2 * coeffs.sigma * coeffs.gamma * fxx * dt))
