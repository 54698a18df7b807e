r"""Reference solver for the linear first-order complex PDE

    U_t + g~(t, x) + alpha U + (beta sigma + theta gamma) U_x = 0,   U(T, x) = h(x),

by characteristics. With ``A(t, s) = \\int_t^s alpha`` and
``C(t, s) = \\int_t^s (beta sigma + theta gamma)``,

    U(t, x) = e^{A(t,T)} h(x + C(t,T)) + \\int_t^T e^{A(t,s)} g~(s, x + C(t,s)) ds.

Coefficients are constant per cell and the data are polynomials, so each
cell's time integral is done exactly: ``g~(x + C + c u)`` is re-expanded in
powers of ``x`` and every ``\\int_0^L e^{alpha u} u^j du`` has a closed form.
U(t, .) is therefore itself a polynomial, returned by :func:`u_poly`.
"""
from __future__ import annotations

import math

import numpy as np

from .analytic import AnalyticPoly, TimeVaryingPoly, diff_poly, eval_poly
from .scenario import Scenario


def exp_moments(alpha: complex, L: float, jmax: int) -> np.ndarray:
    """``I_j = \\int_0^L e^{alpha u} u^j du`` for ``j = 0..jmax``."""
    z = alpha * L
    out = np.empty(jmax + 1, dtype=np.complex128)
    if abs(z) <= 2.0:
        # I_j = L^{j+1} sum_n z^n / (n! (n + j + 1)); terms decay factorially
        for j in range(jmax + 1):
            term, acc, n = 1.0 + 0j, 0j, 0
            while True:
                add = term / (n + j + 1)
                acc += add
                if abs(add) <= 1e-18 * abs(acc) or n > 200:
                    break
                n += 1
                term *= z / n
            out[j] = acc * L ** (j + 1)
    else:
        # upward recursion, stable while |z| dominates j
        e = np.exp(z)
        out[0] = (e - 1.0) / alpha
        for j in range(1, jmax + 1):
            out[j] = (L**j * e - j * out[j - 1]) / alpha
    return out


def _segment_integral(q: np.ndarray, alpha: complex, c: complex, L: float) -> np.ndarray:
    """Coefficients in x of ``\\int_0^L e^{alpha u} q(x + c u) du``."""
    d = q.size - 1
    I = exp_moments(alpha, L, d)
    out = np.zeros(d + 1, dtype=np.complex128)
    for i in range(d + 1):
        acc = 0j
        for m in range(i, d + 1):
            acc += q[m] * math.comb(m, i) * c ** (m - i) * I[m - i]
        out[i] = acc
    return out


def _segment_quadrature(q: AnalyticPoly, alpha, c, L, n_nodes=24) -> np.ndarray:
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    u = 0.5 * L * (nodes + 1.0)
    w = 0.5 * L * weights
    out = np.zeros(q.coeffs.size, dtype=np.complex128)
    for ui, wi in zip(u, w):
        out += wi * np.exp(alpha * ui) * _pad(q.shift(c * ui).coeffs, q.coeffs.size)
    return out


def _pad(c: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=np.complex128)
    out[: c.size] = c
    return out


def _characteristics(scenario: Scenario, t: float, h: AnalyticPoly, g: TimeVaryingPoly,
                     method: str) -> AnalyticPoly:
    grid, co = scenario.grid, scenario.coeffs
    if not (grid.t0 - 1e-12 <= t <= grid.T + 1e-12):
        raise ValueError(f"t={t} outside [{grid.t0}, {grid.T}]")
    speed = co.drift_speed
    deg = max(h.degree, g.degree)
    total = np.zeros(deg + 1, dtype=np.complex128)
    A, C = 0j, 0j  # A(t, s_a), C(t, s_a)
    k0 = grid.cell_index(t)
    s_a = t
    for k in range(k0, grid.n_cells):
        s_b = grid.times[k + 1]
        L = s_b - s_a
        if L > 0:
            q = g[k]
            if not q.is_zero:
                if method == "exact":
                    seg = _segment_integral(q.shift(C).coeffs, co.alpha[k], speed[k], L)
                elif method == "quadrature":
                    seg = _segment_quadrature(q.shift(C), co.alpha[k], speed[k], L)
                else:
                    raise ValueError(f"unknown method {method!r}")
                total += np.exp(A) * _pad(seg, deg + 1)
            A += co.alpha[k] * L
            C += speed[k] * L
        s_a = s_b
    with np.errstate(over="raise", invalid="raise"):
        try:
            total += np.exp(A) * _pad(h.shift(C).coeffs, deg + 1)
        except FloatingPointError:
            raise OverflowError("characteristics solution exceeds float64 range") from None
    return AnalyticPoly(total)


def u_poly(scenario: Scenario, t: float, method: str = "exact") -> AnalyticPoly:
    """U(t, .) as a polynomial in x."""
    return _characteristics(scenario, t, scenario.h, scenario.g_tilde, method)


def ux_poly(scenario: Scenario, t: float, method: str = "exact") -> AnalyticPoly:
    """U_x(t, .), built from h' and the x-derivative of g~ along the same characteristics."""
    return _characteristics(scenario, t, diff_poly(scenario.h, 1), scenario.g_tilde.diff(1), method)


def solve_u(scenario: Scenario, t: float, x, method: str = "exact"):
    return eval_poly(u_poly(scenario, t, method), x)


def solve_ux(scenario: Scenario, t: float, x, method: str = "exact"):
    return eval_poly(ux_poly(scenario, t, method), x)


class PdeSolution:
    """Evaluators for U and U_x of one scenario, with per-time polynomial caching."""

    def __init__(self, scenario: Scenario, method: str = "exact"):
        self.scenario = scenario
        self.method = method
        self._u: dict[float, AnalyticPoly] = {}
        self._ux: dict[float, AnalyticPoly] = {}

    def poly(self, t: float) -> AnalyticPoly:
        if t not in self._u:
            self._u[t] = u_poly(self.scenario, t, self.method)
        return self._u[t]

    def dpoly(self, t: float) -> AnalyticPoly:
        if t not in self._ux:
            self._ux[t] = ux_poly(self.scenario, t, self.method)
        return self._ux[t]

    def u(self, t: float, x):
        return eval_poly(self.poly(t), x)

    def ux(self, t: float, x):
        return eval_poly(self.dpoly(t), x)


def _pde_terms(solution: PdeSolution, t: float, x: complex, h_t: float, h_x: float | None):
    sc = solution.scenario
    grid = sc.grid
    k = grid.cell_index(t)
    if not (grid.times[k] < t - h_t and t + h_t < grid.times[k + 1]):
        raise ValueError("t +/- h_t must lie strictly inside one grid cell")
    u_t = (solution.u(t + h_t, x) - solution.u(t - h_t, x)) / (2 * h_t)
    u = solution.u(t, x)
    if h_x is None:
        ux = solution.ux(t, x)
    else:
        ux = (solution.u(t, x + h_x) - solution.u(t, x - h_x)) / (2 * h_x)
    co = sc.coeffs
    return [u_t, sc.g_tilde[k](x), co.alpha[k] * u, co.beta[k] * co.sigma[k] * ux,
            co.theta[k] * co.gamma[k] * ux]


def pde_residual(solution: PdeSolution, t: float, x: complex, h_t: float = 1e-4,
                 h_x: float | None = None) -> float:
    """``|U_t + g~ + alpha U + beta sigma U_x + theta gamma U_x|`` at ``(t, x)``.

    ``U_t`` is a central difference of step ``h_t`` inside one cell. ``U_x``
    is the analytic derivative, or a central difference if ``h_x`` is given.
    """
    return float(abs(sum(_pde_terms(solution, t, x, h_t, h_x))))


def pde_residual_rel(solution: PdeSolution, t: float, x: complex, h_t: float = 1e-4,
                     h_x: float | None = None) -> float:
    """Residual divided by the size of the terms it balances (and by |U|)."""
    terms = _pde_terms(solution, t, x, h_t, h_x)
    scale = max(abs(solution.u(t, x)), sum(abs(v) for v in terms), 1e-300)
    return float(abs(sum(terms)) / scale)
