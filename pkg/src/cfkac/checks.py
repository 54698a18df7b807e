"""The acceptance battery: twelve check families, each a list of :class:`CheckRow`.

Scenario roles come from their ``tags``: ``validated`` (sigma*gamma == 0,
used for the Feynman-Kac family), ``ito``, ``gap``, ``constraint`` and
``convergence``. Monte Carlo allowances for time bias (``C dt``) are read
off by Richardson: twice the gap between the estimate on the grid and on
the 2x coarser grid driven by the same Brownian paths.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import paths as paths_mod
from .analytic import AnalyticPoly, TimeVaryingPoly
from .bsde_mc import (bsde_batch, fd_gradient, gradient_adjoint, solve_euler_regression,
                      verify_prop31, verify_y_analyticity)
from .cl_algebra import CL2, cl_add, cl_inv, cl_mul
from .experiments import compare, convergence
from .ito_verify import expected_gap, ito_batch, ito_residual
from .paths import (CoefficientTable, TimeGrid, ito_integral, mean_stderr, sample_increments,
                    simulate_forward)
from .pde_char import PdeSolution, pde_residual_rel, solve_ux, u_poly
from .real_equiv import (check_constraint_structure, driver_cr_residual, from_real, to_real,
                         transform_driver)
from .scenario import McSettings, Scenario

ROW_HEADER = ["check", "item", "value", "stderr", "tolerance", "pass"]

FAMILIES = {
    1: "c01_algebra",
    2: "c02_pairing",
    3: "c03_ito_formula",
    4: "c04_ito_gap",
    5: "c05_feynman_kac",
    6: "c06_prop31",
    7: "c07_gradient",
    8: "c08_analyticity",
    9: "c09_pde_solver",
    10: "c10_convergence",
    11: "c11_real_equivalence",
    12: "c12_determinism",
}


@dataclass
class CheckRow:
    check: str
    item: str
    value: float
    stderr: float | None
    tolerance: float
    passed: bool

    def csv_row(self) -> list:
        return [self.check, self.item, self.value, self.stderr, self.tolerance,
                "pass" if self.passed else "fail"]


def row(check, item, value, tolerance, stderr=None) -> CheckRow:
    value = float(value)
    return CheckRow(check, item, value, None if stderr is None else float(stderr),
                    float(tolerance), bool(value <= tolerance))


@dataclass
class RunReport:
    families: dict = field(default_factory=dict)  # name -> list[CheckRow]

    @property
    def passed(self) -> bool:
        return all(r.passed for rows in self.families.values() for r in rows)

    def family_passed(self, name: str) -> bool:
        rows = self.families.get(name, [])
        return bool(rows) and all(r.passed for r in rows)


class SuiteContext:
    """Scenarios with run-wide overrides, plus caches shared between families."""

    def __init__(self, scenarios, seed: int | None = None, n_paths: int | None = None):
        self.seed, self.n_paths = seed, n_paths
        self.scenarios = [self._override(s) for s in scenarios]
        self._batch, self._field = {}, {}

    def _override(self, sc: Scenario) -> Scenario:
        mc = McSettings(sc.mc.n_paths if self.n_paths is None else self.n_paths,
                        sc.mc.seed if self.seed is None else self.seed, sc.mc.basis_degree)
        return sc.replace(mc=mc)

    @property
    def master_seed(self) -> int:
        return 20240601 if self.seed is None else self.seed

    @property
    def default_paths(self) -> int:
        return 100_000 if self.n_paths is None else self.n_paths

    def tagged(self, tag: str) -> list[Scenario]:
        return [s for s in self.scenarios if tag in s.tags]

    def batch(self, sc: Scenario):
        if sc.id not in self._batch:
            self._batch[sc.id] = bsde_batch(sc)
        return self._batch[sc.id]

    def field(self, sc: Scenario):
        if sc.id not in self._field:
            self._field[sc.id] = solve_euler_regression(sc, batch=self.batch(sc))
        return self._field[sc.id]

    def drop_batches(self):
        """Free the path arrays; fitted fields are small and stay cached."""
        self._batch.clear()


def _rng(seed: int, label: str) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=seed, spawn_key=(paths_mod.stream_key(label),))))


# --- 1 ---------------------------------------------------------------------------------------

def check_algebra(ctx: SuiteContext, n: int = 10_000) -> list[CheckRow]:
    rng = _rng(ctx.master_seed, "cl_algebra")
    u = rng.uniform(-10, 10, (n, 4))
    add = mul = inv = 0.0
    noncommuting = 0
    for a, b, c, d in u:
        x, y = CL2(a, b), CL2(c, d)
        zx, zy = complex(a, b), complex(c, d)
        s, p, q = cl_add(x, y), cl_mul(x, y), cl_inv(x)
        add = max(add, abs(s.a - (zx + zy).real), abs(s.b - (zx + zy).imag))
        mul = max(mul, abs(p.a - (zx * zy).real), abs(p.b - (zx * zy).imag))
        zi = 1 / zx
        inv = max(inv, abs(q.a - zi.real), abs(q.b - zi.imag))
        noncommuting += cl_mul(y, x) != p
    return [row("add_vs_complex", f"{n} pairs", add, 1e-12),
            row("mul_vs_complex", f"{n} pairs", mul, 1e-12),
            row("inv_vs_complex", f"{n} pairs", inv, 1e-12),
            row("mul_commutes", f"{n} pairs", noncommuting, 0)]


# --- 2 ---------------------------------------------------------------------------------------

def check_pairing(ctx: SuiteContext, n_cells: int = 64) -> list[CheckRow]:
    grid = TimeGrid.uniform(0.0, 1.0, n_cells)
    b = sample_increments(ctx.master_seed, ctx.default_paths, grid, label="pairing")
    dB, dBbar, dt = b.dB, b.dBbar, grid.dt
    out = []
    for name, s in (("dB_dB", (dB * dB).sum(1)), ("dBbar_dBbar", (dBbar * dBbar).sum(1)),
                    ("dB_dBbar_minus_2dt", (dB * dBbar - 2 * dt).sum(1))):
        m, se = mean_stderr(s)
        out.append(row(name, "sum over cells", abs(m), 5 * se, se))
    t = grid.times[:-1]
    f = np.exp(1j * t) * (1 + t)
    m, se = mean_stderr(np.abs(ito_integral(f, b)) ** 2 - 2 * np.sum(np.abs(f) ** 2 * dt))
    out.append(row("isometry", "deterministic f", abs(m), 5 * se, se))
    co = CoefficientTable.constant(grid, sigma=1.0)
    X = simulate_forward(1.0, co, b)
    integral = ito_integral(lambda k, past: past[:, -1], b, X=X)
    m, se = mean_stderr(np.abs(integral) ** 2 - 2 * (np.abs(X[:, :-1]) ** 2 * dt).sum(1))
    out.append(row("isometry", "adapted f = X", abs(m), 5 * se, se))
    return out


# --- 3, 4 ------------------------------------------------------------------------------------

def _ito_pair(sc: Scenario, include_correction: bool):
    """Residual on the scenario grid and on the 2x coarser grid with the same paths."""
    batch = ito_batch(sc.grid, sc.mc.n_paths, sc.mc.seed, sc.id)
    fine = ito_residual(sc.ito_F, sc.coeffs, sc.x0, batch=batch,
                        include_correction=include_correction, scenario_id=sc.id)
    coarse = ito_residual(sc.ito_F, sc.coeffs.coarsen(2), sc.x0, batch=batch.coarsen(2),
                          include_correction=include_correction, scenario_id=sc.id)
    return fine, 2 * abs(fine.mean_residual - coarse.mean_residual)


def check_ito_formula(ctx: SuiteContext) -> list[CheckRow]:
    out = []
    for sc in ctx.tagged("ito"):
        if not sc.coeffs.sigma_gamma_zero:
            raise ValueError(f"scenario {sc.id} is tagged 'ito' but sigma*gamma != 0")
        rep, cdt = _ito_pair(sc, include_correction=False)
        out.append(row("residual_no_correction", sc.id, abs(rep.mean_residual),
                       3 * rep.stderr + cdt, rep.stderr))
    return out


def check_ito_gap(ctx: SuiteContext) -> list[CheckRow]:
    out = []
    for sc in ctx.tagged("gap"):
        off, _ = _ito_pair(sc, include_correction=False)
        expected = expected_gap(sc.ito_F, sc.coeffs)
        out.append(row("off_equals_expected_gap", f"{sc.id} (expected {expected:.6g})",
                       abs(off.mean_residual - expected), 3 * off.stderr, off.stderr))
        on, cdt = _ito_pair(sc, include_correction=True)
        out.append(row("on_vanishes", sc.id, abs(on.mean_residual), 3 * on.stderr + cdt,
                       on.stderr))
    return out


# --- 5 - 8 -----------------------------------------------------------------------------------

def check_feynman_kac(ctx: SuiteContext) -> list[CheckRow]:
    out = []
    for sc in ctx.tagged("validated"):
        res = compare(sc, batch=ctx.batch(sc), field=ctx.field(sc))
        out.append(row("adjoint_vs_char", sc.id, res.gap_adj, 3 * res.se_adj, res.se_adj))
        out.append(row("euler_vs_char", sc.id, res.gap_eur,
                       3 * res.se_eur + res.bias_allowance, res.se_eur))
    return out


def check_prop31(ctx: SuiteContext, tol: float = 0.05) -> list[CheckRow]:
    out = []
    for sc in ctx.tagged("validated"):
        rep = verify_prop31(sc, field=ctx.field(sc))
        out.append(row("Z_vs_sigma_Ux", sc.id, rep.rel_z, tol))
        out.append(row("T_vs_gamma_Ux", sc.id, rep.rel_tau, tol))
    return out


def check_gradient(ctx: SuiteContext) -> list[CheckRow]:
    out = []
    for sc in ctx.tagged("validated"):
        b = ctx.batch(sc)
        g, gse = gradient_adjoint(sc, batch=b)
        fd, fdse = fd_gradient(sc, batch=b)
        comb = float(np.hypot(gse, fdse))
        out.append(row("adjoint_vs_fd", sc.id, abs(g - fd), 3 * comb + 1e-4, comb))
        ux = complex(solve_ux(sc, sc.grid.t0, sc.x0))
        out.append(row("adjoint_vs_Ux", sc.id, abs(g - ux), 3 * gse, gse))
    return out


def check_analyticity(ctx: SuiteContext) -> list[CheckRow]:
    out = []
    for sc in ctx.tagged("validated"):
        rep = verify_y_analyticity(sc, batch=ctx.batch(sc))
        out.append(row("cl_distance_of_jacobian", sc.id, rep.residual,
                       3 * rep.stderr + 1e-4, rep.stderr))
    return out


# --- 9 ---------------------------------------------------------------------------------------

def pde_probes(sc: Scenario, n: int, seed: int):
    """``n`` points: cell midpoints paired with x in the unit disk around x0."""
    rng = _rng(seed, f"pde_probes/{sc.id}")
    grid = sc.grid
    ks = rng.integers(0, grid.n_cells, n)
    r, phi = np.sqrt(rng.uniform(0, 1, n)), rng.uniform(0, 2 * np.pi, n)
    ts = 0.5 * (grid.times[ks] + grid.times[ks + 1])
    return ts, sc.x0 + r * np.exp(1j * phi)


def flow_defect(sc: Scenario, k1: int, t: float, xs) -> float:
    """Relative gap between U(t) and the solution that stops at t_k1 with data U(t_k1)."""
    mid = u_poly(sc, float(sc.grid.times[k1]))
    direct = u_poly(sc, t)(xs)
    staged = u_poly(sc.head(k1, mid), t)(xs)
    return float(np.max(np.abs(direct - staged)) / max(np.max(np.abs(direct)), 1e-300))


def check_pde_solver(ctx: SuiteContext, n_probes: int = 20) -> list[CheckRow]:
    out = []
    for sc in ctx.scenarios:
        sol = PdeSolution(sc)
        h_t = 0.25 * float(sc.grid.dt.min())
        h_t = min(h_t, 1e-4)
        ts, xs = pde_probes(sc, n_probes, ctx.master_seed)
        res = max(pde_residual_rel(sol, float(t), complex(x), h_t=h_t) for t, x in zip(ts, xs))
        out.append(row("residual_rel", f"{sc.id} ({n_probes} probes)", res, 1e-5))
        term = u_poly(sc, sc.grid.T)
        n = max(term.coeffs.size, sc.h.coeffs.size)
        pad = lambda c: np.pad(c, (0, n - c.size))
        out.append(row("terminal_identity", sc.id,
                       np.max(np.abs(pad(term.coeffs) - pad(sc.h.coeffs))), 0.0))
        N = sc.grid.n_cells
        flow = max(flow_defect(sc, k1, float(sc.grid.times[k0]), xs)
                   for k0, k1 in ((0, N // 2), (0, N - 1), (N // 4, (3 * N) // 4)) if k1 > k0)
        out.append(row("flow_property_rel", sc.id, flow, 1e-10))
    return out


# --- 10 --------------------------------------------------------------------------------------

def check_convergence(ctx: SuiteContext, levels: int = 3) -> list[CheckRow]:
    out = []
    for sc in ctx.tagged("convergence"):
        st = convergence(sc, levels, batch=ctx.batch(sc))
        for d, e, s in zip(st.dt, st.error, st.stderr):
            out.append(CheckRow("abs_error", f"{sc.id} dt={float(d)!r}", float(e), float(s),
                                float("inf"), True))
        for i, r in enumerate(st.ratios):
            step = f"dt={float(st.dt[i])!r}->{float(st.dt[i + 1])!r}"
            out.append(row("ratio_minus_2", f"{sc.id} {step}", abs(r - 2.0), 0.3))
        out.append(row("fitted_ratio_minus_2", sc.id, abs(st.fitted_ratio - 2.0), 0.3))
    return out


# --- 11 --------------------------------------------------------------------------------------

def random_linear_scenario(seed: int, n_cells: int = 8) -> Scenario:
    rng = _rng(seed, "random_linear_scenario")
    c = lambda: complex(*rng.normal(0, 1, 2))
    grid = TimeGrid.uniform(0.0, 1.0, n_cells)
    co = CoefficientTable(grid, *(np.array([c() for _ in range(n_cells)]) for _ in range(5)))
    g = TimeVaryingPoly([AnalyticPoly([c() for _ in range(3)]) for _ in range(n_cells)])
    return Scenario("random_linear", co, AnalyticPoly([c() for _ in range(4)]), g, c())


def check_real_equivalence(ctx: SuiteContext, n: int = 10_000) -> list[CheckRow]:
    rng = _rng(ctx.master_seed, "real_equiv")
    v = rng.normal(0, 10, (n, 6))
    rt_err = 0.0
    for y1, y2, z1, z2, g1, g2 in v:
        y, z, tau = complex(y1, y2), complex(z1, z2), complex(g1, g2)
        yy, zz, tt = from_real(to_real(y, z, tau))
        rt_err = max(rt_err, abs(yy.real - y1), abs(yy.imag - y2), abs(zz.real - z1),
                     abs(zz.imag - z2), abs(tt.real - g1), abs(tt.imag - g2))
    out = [row("roundtrip", f"{n} triples", rt_err, 1e-12)]
    for sc in ctx.scenarios + [random_linear_scenario(ctx.master_seed)]:
        drv = transform_driver(sc)
        pts = rng.normal(0, 1, (5, 8))
        cr = max(driver_cr_residual(drv, float(sc.grid.times[k % sc.grid.n_cells]), p[:2], p[2:4],
                                    p[4:].reshape(2, 2)) for k, p in enumerate(pts))
        out.append(row("driver_cr_residual", sc.id, cr, 1e-6))
    for sc in ctx.tagged("constraint"):
        co = sc.coeffs
        s0, g0 = bool(np.all(co.sigma == 0)), bool(np.all(co.gamma == 0))
        fld = ctx.field(sc)
        if s0 and g0:
            rep = check_constraint_structure(fld, "sigma_system")
            out.append(row("zmat_vanishes", sc.id, rep.max_norm, 1e-10))
        elif g0 or s0:
            which = "sigma_system" if g0 else "gamma_system"
            rep = check_constraint_structure(fld, which)
            out.append(row(which, sc.id, rep.relative, 0.05))
        else:
            raise ValueError(f"constraint scenario {sc.id} needs sigma == 0 or gamma == 0")
    return out


# --- 12 --------------------------------------------------------------------------------------

def check_determinism(ctx: SuiteContext) -> list[CheckRow]:
    """In-process part: redraws are bitwise equal, whatever the worker count."""
    grid = TimeGrid.uniform(0.0, 1.0, 16)
    n = 3 * paths_mod.BLOCK_SIZE + 17
    saved = os.environ.get(paths_mod.WORKERS_ENV)
    try:
        os.environ[paths_mod.WORKERS_ENV] = "1"
        a = sample_increments(ctx.master_seed, n, grid, label="determinism")
        b = sample_increments(ctx.master_seed, n, grid, label="determinism")
        os.environ[paths_mod.WORKERS_ENV] = "4"
        c = sample_increments(ctx.master_seed, n, grid, label="determinism")
    finally:
        if saved is None:
            os.environ.pop(paths_mod.WORKERS_ENV, None)
        else:
            os.environ[paths_mod.WORKERS_ENV] = saved
    same = lambda p, q: p.dB1.tobytes() == q.dB1.tobytes() and p.dB2.tobytes() == q.dB2.tobytes()
    return [row("redraw_bitwise_equal", "same seed", 0 if same(a, b) else 1, 0),
            row("workers_bitwise_equal", "1 vs 4 workers", 0 if same(a, c) else 1, 0)]


CHECKS = {
    1: check_algebra, 2: check_pairing, 3: check_ito_formula, 4: check_ito_gap,
    5: check_feynman_kac, 6: check_prop31, 7: check_gradient, 8: check_analyticity,
    9: check_pde_solver, 10: check_convergence, 11: check_real_equivalence,
    12: check_determinism,
}


def run_families(ctx: SuiteContext, ids) -> RunReport:
    rep = RunReport()
    for i in sorted(ids):
        rep.families[FAMILIES[i]] = CHECKS[i](ctx)
        if i == 8:
            ctx.drop_batches()
    return rep


def run_suite(scenarios, seed: int | None = None, n_paths: int | None = None,
              only=None) -> RunReport:
    return run_families(SuiteContext(scenarios, seed, n_paths), CHECKS if only is None else only)
