"""Monte Carlo solvers for the linear complex BSDE

    Y_s = h(X_T) + \\int_s^T (g~ + alpha Y + beta Z + theta T) dr
          - \\int_s^T Z dB - \\int_s^T T dB~.

Two independent routes:

* adjoint (integrating factor): ``dM = M (alpha dt + theta/2 dB + beta/2 dB~)``,
  ``M_t = 1``, turns the BSDE into the plain expectation
  ``Y_t = E[M_T h(X_T) + \\int_t^T M_r g~(r, X_r) dr]``. The factors 1/2 come
  from the pairing ``dB dB~ = 2 dt``; ``-beta theta / 2`` is the Ito correction
  of the exponential.
* backward Euler with least-squares conditional expectations on the complex
  monomials ``{1, X, ..., X^d}``, producing (Y, Z, T) fields per cell.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analytic import AnalyticPoly, TimeVaryingPoly, diff_poly, eval_poly
from .cl_algebra import cl_distance
from .paths import (CoefficientTable, PathBatch, mean_stderr, sample_increments,
                    simulate_forward)
from .pde_char import PdeSolution
from .scenario import Scenario

COND_THRESHOLD = 1e10
MIN_PATHS_PER_BASIS = 10


class RegressionError(RuntimeError):
    """Ill-conditioned or under-determined least-squares regression."""


@dataclass
class BsdeEstimate:
    y: complex
    y_stderr: float
    z: complex | None = None
    z_stderr: float | None = None
    tau: complex | None = None
    tau_stderr: float | None = None
    diagnostics: dict = field(default_factory=dict)


def bsde_batch(scenario: Scenario, n_paths: int | None = None, seed: int | None = None) -> PathBatch:
    """The Brownian batch shared by every estimator run on ``scenario``."""
    n = scenario.mc.n_paths if n_paths is None else n_paths
    s = scenario.mc.seed if seed is None else seed
    return sample_increments(s, n, scenario.grid, label=f"bsde_mc/{scenario.id}")


def adjoint_weights(coeffs: CoefficientTable, batch: PathBatch) -> np.ndarray:
    """``M[j, k]`` on every knot with ``M[:, 0] = 1``."""
    dt = coeffs.grid.dt
    b, th = coeffs.beta, coeffs.theta
    incr = ((coeffs.alpha - 0.5 * b * th) * dt
            + 0.5 * (th + b) * batch.dB1 + (0.5j * (th - b)) * batch.dB2)
    logM = np.zeros((batch.n_paths, dt.size + 1), dtype=np.complex128)
    np.cumsum(incr, axis=1, out=logM[:, 1:])
    with np.errstate(over="ignore", invalid="ignore"):
        M = np.exp(logM)
    if not np.all(np.isfinite(M)):
        raise OverflowError("adjoint weights overflow float64; coefficients too large")
    return M


def _start(scenario: Scenario, batch: PathBatch, t: float | None):
    if t is None:
        return scenario, batch
    k0 = scenario.grid.node_index(t)
    if k0 == scenario.grid.n_cells:
        raise ValueError("start time must precede T")
    return scenario.sub(k0), batch.sub(k0)


def _adjoint_samples(scenario: Scenario, batch: PathBatch, x, h: AnalyticPoly,
                     g: TimeVaryingPoly, quadrature: str, M=None, D=None) -> np.ndarray:
    """Per-path ``M_T h(X_T) + \\int M g~ dr``.

    ``D`` is the noise part ``X - x`` of the forward paths; the dynamics are
    additive, so one simulation serves every starting point.
    """
    co = scenario.coeffs
    X = simulate_forward(x, co, batch) if D is None else D + x
    if M is None:
        M = adjoint_weights(co, batch)
    out = M[:, -1] * eval_poly(h, X[:, -1])
    dt = scenario.grid.dt
    for k in range(dt.size):
        gk = g[k]
        if gk.is_zero:
            continue
        left = M[:, k] * eval_poly(gk, X[:, k])
        if quadrature == "trapezoid":
            right = M[:, k + 1] * eval_poly(gk, X[:, k + 1])
            out = out + 0.5 * dt[k] * (left + right)
        elif quadrature == "left":
            out = out + dt[k] * left
        else:
            raise ValueError(f"unknown quadrature {quadrature!r}")
    return out


def solve_y_adjoint(scenario: Scenario, t: float | None = None, x=None, n_paths=None, seed=None,
                    batch: PathBatch | None = None, quadrature: str = "trapezoid") -> BsdeEstimate:
    """Y at ``(t, x)`` (default ``(t0, x0)``) from the adjoint representation.

    The running term ``\\int M g~ dr`` uses the trapezoid rule on the grid; its
    time error is second order, below Monte Carlo noise at the default budget.
    """
    batch = bsde_batch(scenario, n_paths, seed) if batch is None else batch
    x = scenario.x0 if x is None else x
    sc, b = _start(scenario, batch, t)
    v = _adjoint_samples(sc, b, x, sc.h, sc.g_tilde, quadrature)
    y, se = mean_stderr(v)
    return BsdeEstimate(complex(y), se, diagnostics={
        "scheme": "adjoint", "n_paths": b.n_paths, "quadrature": quadrature})


def _gradient_samples(sc: Scenario, b: PathBatch, x, quadrature: str) -> np.ndarray:
    return _adjoint_samples(sc, b, x, diff_poly(sc.h, 1), sc.g_tilde.diff(1), quadrature)


def gradient_adjoint(scenario: Scenario, t=None, x=None, n_paths=None, seed=None,
                     batch: PathBatch | None = None, quadrature: str = "trapezoid"):
    """``dY/dx = E[M h'(X_T) + \\int M g~_x dr]`` (the flow derivative of X is 1).

    Returns ``(value, stderr)``.
    """
    batch = bsde_batch(scenario, n_paths, seed) if batch is None else batch
    x = scenario.x0 if x is None else x
    sc, b = _start(scenario, batch, t)
    m, se = mean_stderr(_gradient_samples(sc, b, x, quadrature))
    return complex(m), se


def fd_gradient(scenario: Scenario, t=None, x=None, step: float = 1e-3, n_paths=None, seed=None,
                batch: PathBatch | None = None, quadrature: str = "trapezoid"):
    """Central difference of the adjoint estimator along the real axis, common random numbers."""
    batch = bsde_batch(scenario, n_paths, seed) if batch is None else batch
    x = scenario.x0 if x is None else x
    sc, b = _start(scenario, batch, t)
    M, D = adjoint_weights(sc.coeffs, b), simulate_forward(0j, sc.coeffs, b)
    vp = _adjoint_samples(sc, b, x + step, sc.h, sc.g_tilde, quadrature, M, D)
    vm = _adjoint_samples(sc, b, x - step, sc.h, sc.g_tilde, quadrature, M, D)
    m, se = mean_stderr((vp - vm) / (2 * step))
    return complex(m), se


@dataclass
class AnalyticityReport:
    residual: float
    stderr: float
    jacobian: np.ndarray


def verify_y_analyticity(scenario: Scenario, t=None, x=None, fd_step: float = 1e-3, n_paths=None,
                         seed=None, batch: PathBatch | None = None,
                         quadrature: str = "trapezoid") -> AnalyticityReport:
    """C_L distance of the real Jacobian of ``x -> Y_t^{t,x}``.

    The four shifted evaluations share one Brownian batch, so the Jacobian is
    a difference of strongly correlated estimates.
    """
    batch = bsde_batch(scenario, n_paths, seed) if batch is None else batch
    x = scenario.x0 if x is None else x
    sc, b = _start(scenario, batch, t)
    M, D = adjoint_weights(sc.coeffs, b), simulate_forward(0j, sc.coeffs, b)
    f = lambda xx: _adjoint_samples(sc, b, xx, sc.h, sc.g_tilde, quadrature, M, D)
    d1 = (f(x + fd_step) - f(x - fd_step)) / (2 * fd_step)        # d/dx1 (Re + i Im)
    d2 = (f(x + 1j * fd_step) - f(x - 1j * fd_step)) / (2 * fd_step)  # d/dx2
    J = np.array([[d1.real.mean(), d2.real.mean()], [d1.imag.mean(), d2.imag.mean()]])
    _, se_a = mean_stderr(d1.real - d2.imag)
    _, se_b = mean_stderr(d2.real + d1.imag)
    return AnalyticityReport(cl_distance(J), 0.5 * (se_a + se_b), J)


# --- backward Euler with least-squares regression -------------------------------------------

@dataclass
class RegressionFit:
    """Least-squares fit on ``{1, w, ..., w^d}`` with ``w = (x - center) / scale``.

    The centred, scaled monomials span the same space as ``{1, x, ..., x^d}``
    and are nearly orthogonal under a complex Gaussian law.
    """

    center: complex
    scale: float
    coef: np.ndarray  # (d + 1, n_targets)

    @property
    def degree(self) -> int:
        return self.coef.shape[0] - 1

    def basis(self, x) -> np.ndarray:
        return _monomials((np.asarray(x, dtype=np.complex128) - self.center) / self.scale,
                          self.degree)

    def __call__(self, x, col: int = 0):
        return self.basis(x) @ self.coef[:, col]


def _monomials(w: np.ndarray, degree: int) -> np.ndarray:
    out = np.empty(w.shape + (degree + 1,), dtype=np.complex128)
    out[..., 0] = 1.0
    for j in range(1, degree + 1):
        np.multiply(out[..., j - 1], w, out=out[..., j])
    return out


@dataclass(eq=False)
class Design:
    """Checked design matrix on one sample of X_k, reusable for several targets."""

    center: complex
    scale: float
    A: np.ndarray   # (n, d + 1)
    AH: np.ndarray  # conjugate transpose of A, kept for repeated fits
    G: np.ndarray   # normal matrix A^H A / n

    def fit(self, targets: np.ndarray) -> RegressionFit:
        rhs = self.AH @ targets / self.A.shape[0]
        return RegressionFit(self.center, self.scale, np.linalg.solve(self.G, rhs))

    def fitted(self, fit: RegressionFit) -> np.ndarray:
        """In-sample fitted values, shape ``(n, n_targets)``."""
        return self.A @ fit.coef


def make_design(X: np.ndarray, degree: int) -> Design:
    n = X.shape[0]
    center = X.mean()
    spread = np.sqrt(np.mean(np.abs(X - center) ** 2))
    if spread <= 1e-13 * (1.0 + abs(center)):
        degree, spread = 0, 1.0  # all paths at one point: only constants are identifiable
    p = degree + 1
    if n < MIN_PATHS_PER_BASIS * p:
        raise RegressionError(f"{n} paths are too few for a basis of size {p}")
    A = _monomials((X - center) / spread, degree)
    AH = np.ascontiguousarray(A.conj().T)
    G = AH @ A / n
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > COND_THRESHOLD:
        raise RegressionError(f"normal equations ill-conditioned (cond={cond:.3e}, "
                              f"degree={degree}, spread={spread:.3e})")
    return Design(center, float(spread), A, AH, G)


def fit_conditional(X: np.ndarray, targets: np.ndarray, degree: int) -> RegressionFit:
    """Regress each column of ``targets`` on the monomial basis evaluated at ``X``."""
    return make_design(X, degree).fit(targets)


@dataclass
class EulerField:
    """Regression estimates of (Y, Z, T) on every cell of the grid."""

    scenario: Scenario
    ey_fits: list  # E_k[Y_{k+1}] as a function of X_k, k = 0..N-1
    zt_fits: list  # columns (Z_k, T_k)
    x_mean: np.ndarray
    x_sd: np.ndarray
    y0: complex
    y0_stderr: float
    z0: complex
    z0_stderr: float
    tau0: complex
    tau0_stderr: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.scenario.grid

    def y_at(self, k: int, x):
        if k == self.grid.n_cells:
            return eval_poly(self.scenario.h, x)
        co, dt = self.scenario.coeffs, self.grid.dt[k]
        ey = self.ey_fits[k](x)
        zt = self.zt_fits[k].basis(x) @ self.zt_fits[k].coef
        drv = (eval_poly(self.scenario.g_tilde[k], x) + co.alpha[k] * ey
               + co.beta[k] * zt[..., 0] + co.theta[k] * zt[..., 1])
        return ey + drv * dt

    def z_at(self, k: int, x):
        return self.zt_fits[k](x, 0)

    def tau_at(self, k: int, x):
        return self.zt_fits[k](x, 1)

    def estimate(self) -> BsdeEstimate:
        return BsdeEstimate(self.y0, self.y0_stderr, self.z0, self.z0_stderr,
                            self.tau0, self.tau0_stderr, dict(self.diagnostics))


def solve_euler_regression(scenario: Scenario, basis_degree: int | None = None, n_paths=None,
                           seed=None, batch: PathBatch | None = None) -> EulerField:
    """Explicit backward Euler from ``(t0, x0)``.

    ``Z_k = E_k[(Y_{k+1} - E_k Y_{k+1}) dB~_k] / (2 dt)`` and likewise ``T_k``
    with ``dB_k``; subtracting the fitted conditional mean leaves the
    projections unchanged in expectation and removes most of their variance.
    """
    batch = bsde_batch(scenario, n_paths, seed) if batch is None else batch
    deg = scenario.basis_degree if basis_degree is None else basis_degree
    co, grid = scenario.coeffs, scenario.grid
    dt = grid.dt
    X = simulate_forward(scenario.x0, co, batch)
    N = grid.n_cells
    ey_fits, zt_fits = [None] * N, [None] * N
    Y = eval_poly(scenario.h, X[:, N])
    # Every basis holds the constant, so OLS residuals average to zero on the
    # sample and mean(Y_k) = (1 + alpha dt) mean(Y_{k+1}) + mean(driver) dt.
    # Hence y0 is exactly the path average of ``carried``, whose spread gives
    # an honest standard error (the step-0 spread alone would miss all the
    # regression noise accumulated further down the grid).
    carried = Y.copy()
    z_samples = t_samples = None
    for k in range(N - 1, -1, -1):
        Xk = X[:, k]
        des = make_design(Xk, deg)
        fit_y = des.fit(Y[:, None])
        ey = des.fitted(fit_y)[:, 0]
        innov = Y - ey
        dBk = batch.dB1[:, k] + 1j * batch.dB2[:, k]
        proj = np.stack([innov * dBk.conj(), innov * dBk], axis=1) / (2 * dt[k])
        fit_zt = des.fit(proj)
        zt = des.fitted(fit_zt)
        ey_fits[k], zt_fits[k] = fit_y, fit_zt
        if k == 0:
            z_samples, t_samples = proj[:, 0], proj[:, 1]
        free = (eval_poly(scenario.g_tilde[k], Xk) + co.beta[k] * zt[:, 0]
                + co.theta[k] * zt[:, 1]) * dt[k]
        Y = ey * (1 + co.alpha[k] * dt[k]) + free
        carried = carried * (1 + co.alpha[k] * dt[k]) + free
    _, se_y = mean_stderr(carried)
    y0 = Y[0]
    z0, se_z = mean_stderr(z_samples)
    t0, se_t = mean_stderr(t_samples)
    x_mean = X.mean(axis=0)
    x_sd = np.sqrt(np.mean(np.abs(X - x_mean) ** 2, axis=0))
    return EulerField(scenario, ey_fits, zt_fits, x_mean, x_sd, complex(y0), se_y,
                      complex(z0), se_z, complex(t0), se_t,
                      {"scheme": "euler", "n_paths": batch.n_paths, "basis_degree": deg})


# --- Proposition-level checks ----------------------------------------------------------------

DEFAULT_PROBES = (0.0, 1.0, -1.0, 1.0j, -1.0j)


@dataclass
class Prop31Report:
    max_dev_z: float
    max_dev_tau: float
    scale: float

    @property
    def rel_z(self) -> float:
        return self.max_dev_z / self.scale if self.scale > 0 else self.max_dev_z

    @property
    def rel_tau(self) -> float:
        return self.max_dev_tau / self.scale if self.scale > 0 else self.max_dev_tau


def probe_points(field: EulerField, k: int, probes=DEFAULT_PROBES) -> np.ndarray:
    """Probe locations at cell ``k``: sample mean of X_k plus offsets in units of its spread."""
    return field.x_mean[k] + field.x_sd[k] * np.asarray(probes, dtype=np.complex128)


def verify_prop31(scenario: Scenario, field: EulerField | None = None, probes=DEFAULT_PROBES,
                  cells=None) -> Prop31Report:
    """Max deviation of regression Z from ``sigma U_x`` and of T from ``gamma U_x``.

    ``scale`` is the largest ``max(|sigma|, |gamma|) |U_x|`` over all probes.
    """
    if not scenario.coeffs.sigma_gamma_zero:
        raise ValueError("verify_prop31 requires sigma*gamma == 0 on every cell")
    field = solve_euler_regression(scenario) if field is None else field
    sol = PdeSolution(scenario)
    co, times = scenario.coeffs, scenario.grid.times
    cells = range(scenario.grid.n_cells) if cells is None else cells
    dz = dt_ = scale = 0.0
    for k in cells:
        xs = probe_points(field, k, probes)
        ux = sol.ux(float(times[k]), xs)
        dz = max(dz, float(np.max(np.abs(field.z_at(k, xs) - co.sigma[k] * ux))))
        dt_ = max(dt_, float(np.max(np.abs(field.tau_at(k, xs) - co.gamma[k] * ux))))
        scale = max(scale, float(np.max(np.abs(ux))) * max(abs(co.sigma[k]), abs(co.gamma[k])))
    return Prop31Report(dz, dt_, scale)
