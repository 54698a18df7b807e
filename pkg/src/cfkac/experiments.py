"""Scheme comparisons and dyadic convergence studies against the reference PDE solution."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bsde_mc import bsde_batch, solve_euler_regression, solve_y_adjoint
from .paths import PathBatch
from .pde_char import solve_u
from .scenario import Scenario

COMPARE_HEADER = ["scenario_id", "Re U_ref", "Im U_ref", "Re Y_adj", "Im Y_adj", "Re Y_eur",
                  "Im Y_eur", "stderr_adj", "stderr_eur", "gap_adj", "gap_eur"]
CONVERGENCE_HEADER = ["dt", "abs_error", "stderr"]


@dataclass
class CompareResult:
    scenario_id: str
    u_ref: complex
    y_adj: complex
    se_adj: float
    y_eur: complex
    se_eur: float
    y_eur_coarse: complex | None = None  # Euler on the 2x coarser grid, same paths

    @property
    def gap_adj(self) -> float:
        return abs(self.y_adj - self.u_ref)

    @property
    def gap_eur(self) -> float:
        return abs(self.y_eur - self.u_ref)

    @property
    def bias_allowance(self) -> float:
        """``C dt`` read off by Richardson: ``2 |Y_dt - Y_2dt|`` (0 if no coarse run)."""
        if self.y_eur_coarse is None:
            return 0.0
        return 2.0 * abs(self.y_eur - self.y_eur_coarse)

    def csv_row(self) -> list:
        return [self.scenario_id, self.u_ref.real, self.u_ref.imag, self.y_adj.real,
                self.y_adj.imag, self.y_eur.real, self.y_eur.imag, self.se_adj, self.se_eur,
                self.gap_adj, self.gap_eur]


def compare(scenario: Scenario, batch: PathBatch | None = None, field=None,
            coarse: bool = True) -> CompareResult:
    """Adjoint and Euler estimates of Y at ``(t0, x0)`` next to the characteristics value."""
    batch = bsde_batch(scenario) if batch is None else batch
    u = complex(solve_u(scenario, scenario.grid.t0, scenario.x0))
    adj = solve_y_adjoint(scenario, batch=batch)
    field = solve_euler_regression(scenario, batch=batch) if field is None else field
    yc = None
    if coarse and scenario.grid.n_cells % 2 == 0:
        yc = solve_euler_regression(scenario.coarsen(2), batch=batch.coarsen(2)).y0
    return CompareResult(scenario.id, u, adj.y, adj.y_stderr, field.y0, field.y0_stderr, yc)


@dataclass
class ConvergenceStudy:
    dt: np.ndarray          # coarsest first
    error: np.ndarray
    stderr: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        """Error ratio per halving of dt."""
        return self.error[:-1] / self.error[1:]

    @property
    def fitted_ratio(self) -> float:
        """``2**p`` with ``p`` the least-squares slope of log2(error) on log2(dt)."""
        if self.dt.size < 2:
            return float("nan")
        p = np.polyfit(np.log2(self.dt), np.log2(self.error), 1)[0]
        return float(2.0 ** p)

    def csv_rows(self) -> list:
        rows = [[d, e, s] for d, e, s in zip(self.dt, self.error, self.stderr)]
        rows.append(["fitted_ratio", self.fitted_ratio, None])
        return rows


def convergence(scenario: Scenario, levels: int = 3, batch: PathBatch | None = None
                ) -> ConvergenceStudy:
    """Euler error at ``levels`` dyadic steps; the finest is the scenario grid.

    Coarser levels observe the same Brownian paths (common random numbers),
    so the Monte Carlo part of the error is shared and the ratio isolates
    the time-discretisation bias.
    """
    if levels < 1:
        raise ValueError("need at least one level")
    n = scenario.grid.n_cells
    factors = [2 ** j for j in range(levels - 1, -1, -1)]
    if n % factors[0]:
        raise ValueError(f"{n} cells cannot be coarsened {levels - 1} times by 2")
    batch = bsde_batch(scenario) if batch is None else batch
    u = complex(solve_u(scenario, scenario.grid.t0, scenario.x0))
    dts, errs, ses = [], [], []
    for f in factors:
        sc, b = (scenario, batch) if f == 1 else (scenario.coarsen(f), batch.coarsen(f))
        fld = solve_euler_regression(sc, batch=b)
        dts.append(float(sc.grid.dt.max()))
        errs.append(abs(fld.y0 - u))
        ses.append(fld.y0_stderr)
    return ConvergenceStudy(np.array(dts), np.array(errs), np.array(ses))
