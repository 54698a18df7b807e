"""The complex BSDE viewed as a 2-dimensional real system.

With ``Z = Z1 + i Z2`` and ``T = G1 + i G2`` the real martingale-part matrix is

    zmat = [[Z1 + G1, G2 + Z2],
            [G2 - Z2, Z1 - G1]]

Its C_L component carries Z and its symmetric traceless component carries T.
The real driver ``(f1, f2)`` reads ``(Z, T)`` back out of ``zmat`` by
half-sums and half-differences of its entries.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic import eval_poly
from .bsde_mc import DEFAULT_PROBES, probe_points
from .cl_algebra import cl_distance
from .scenario import Scenario


@dataclass(frozen=True, eq=False)
class RealTriple:
    y: np.ndarray     # (Y1, Y2)
    zmat: np.ndarray  # 2x2

    def decompose(self) -> tuple[float, float, float, float]:
        """``(Z1, Z2, G1, G2)`` recovered from ``zmat``."""
        m = self.zmat
        return ((m[0, 0] + m[1, 1]) / 2, (m[0, 1] - m[1, 0]) / 2,
                (m[0, 0] - m[1, 1]) / 2, (m[0, 1] + m[1, 0]) / 2)


def zmat_of(z: complex, tau: complex) -> np.ndarray:
    z1, z2, g1, g2 = z.real, z.imag, tau.real, tau.imag
    return np.array([[z1 + g1, g2 + z2], [g2 - z2, z1 - g1]])


def to_real(y: complex, z: complex, tau: complex) -> RealTriple:
    y, z, tau = complex(y), complex(z), complex(tau)
    return RealTriple(np.array([y.real, y.imag]), zmat_of(z, tau))


def from_real(rt: RealTriple) -> tuple[complex, complex, complex]:
    z1, z2, g1, g2 = rt.decompose()
    return complex(rt.y[0], rt.y[1]), complex(z1, z2), complex(g1, g2)


def cl_part(m) -> np.ndarray:
    """The C_L component ``[[a, -b], [b, a]]`` of a real 2x2 matrix."""
    m = np.asarray(m, dtype=float)
    a, b = (m[0, 0] + m[1, 1]) / 2, (m[1, 0] - m[0, 1]) / 2
    return np.array([[a, -b], [b, a]])


def anti_cl_part(m) -> np.ndarray:
    """The symmetric traceless remainder ``m - cl_part(m)``."""
    return np.asarray(m, dtype=float) - cl_part(m)


class RealDriver:
    """``(f1, f2)(t, X, Y, zmat)`` induced by the linear complex driver of a scenario."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario

    def g(self, t: float, x: complex, y: complex, z: complex, tau: complex) -> complex:
        sc = self.scenario
        k = sc.grid.cell_index(t)
        co = sc.coeffs
        return complex(eval_poly(sc.g_tilde[k], x) + co.alpha[k] * y + co.beta[k] * z
                       + co.theta[k] * tau)

    def __call__(self, t: float, X, Y, zmat) -> np.ndarray:
        m = np.asarray(zmat, dtype=float)
        z = complex((m[0, 0] + m[1, 1]) / 2, (m[0, 1] - m[1, 0]) / 2)
        tau = complex((m[0, 0] - m[1, 1]) / 2, (m[0, 1] + m[1, 0]) / 2)
        w = self.g(t, complex(X[0], X[1]), complex(Y[0], Y[1]), z, tau)
        return np.array([w.real, w.imag])

    def check_recombination(self, t: float, x: complex, y: complex, z: complex,
                            tau: complex) -> float:
        """``|f(real args) - g(complex args)|``: the real driver reproduces g."""
        rt = to_real(y, z, tau)
        f = self(t, [x.real, x.imag], rt.y, rt.zmat)
        return float(abs(complex(f[0], f[1]) - self.g(t, x, y, z, tau)))


def transform_driver(scenario: Scenario) -> RealDriver:
    return RealDriver(scenario)


def driver_blocks(driver: RealDriver, t: float, X, Y, zmat, step: float = 1e-5) -> dict:
    """Central-difference Jacobian blocks of ``f`` w.r.t. X, Y and the two Z blocks.

    ``Z_A`` differentiates w.r.t. ``(z11, z12)`` and ``Z_B`` w.r.t. ``(z21, z22)``.
    """
    X, Y, zmat = np.asarray(X, float), np.asarray(Y, float), np.asarray(zmat, float)

    def jac(perturb):
        cols = []
        for i in range(2):
            fp, fm = perturb(i, step), perturb(i, -step)
            cols.append((fp - fm) / (2 * step))
        return np.column_stack(cols)

    def px(i, h):
        e = X.copy(); e[i] += h
        return driver(t, e, Y, zmat)

    def py(i, h):
        e = Y.copy(); e[i] += h
        return driver(t, X, e, zmat)

    def pz(row):
        def p(i, h):
            e = zmat.copy(); e[row, i] += h
            return driver(t, X, Y, e)
        return p

    return {"X": jac(px), "Y": jac(py), "Z_A": jac(pz(0)), "Z_B": jac(pz(1))}


def driver_cr_residual(driver: RealDriver, t: float, X, Y, zmat, step: float = 1e-5) -> float:
    """Largest C_L distance among the Jacobian blocks of the real driver."""
    return max(cl_distance(J) for J in driver_blocks(driver, t, X, Y, zmat, step).values())


@dataclass
class ConstraintReport:
    which: str
    max_violation: float
    scale: float
    max_norm: float  # largest Frobenius norm of the whole zmat

    @property
    def relative(self) -> float:
        return self.max_violation / self.scale if self.scale > 0 else self.max_violation


def check_constraint_structure(field, which: str, probes=None) -> ConstraintReport:
    """Structural constraint of the degenerate real systems on a regression field.

    ``sigma_system`` (gamma == 0): the symmetric traceless part of zmat, i.e.
    T, must vanish. ``gamma_system`` (sigma == 0): the C_L part, i.e. Z, must
    vanish. ``scale`` is the largest norm of the surviving part over the probes;
    when both coefficients vanish the violation is reported in absolute terms.
    """
    co = field.scenario.coeffs
    if which == "sigma_system":
        if np.any(co.gamma != 0):
            raise ValueError("sigma_system requires gamma == 0 on every cell")
    elif which == "gamma_system":
        if np.any(co.sigma != 0):
            raise ValueError("gamma_system requires sigma == 0 on every cell")
    else:
        raise ValueError(f"unknown system {which!r}")
    probes = DEFAULT_PROBES if probes is None else probes
    viol = scale = total = 0.0
    for k in range(field.grid.n_cells):
        for x in probe_points(field, k, probes):
            m = zmat_of(complex(field.z_at(k, x)), complex(field.tau_at(k, x)))
            cl, anti = np.linalg.norm(cl_part(m)), np.linalg.norm(anti_cl_part(m))
            bad, good = (anti, cl) if which == "sigma_system" else (cl, anti)
            viol, scale = max(viol, bad), max(scale, good)
            total = max(total, float(np.linalg.norm(m)))
    return ConstraintReport(which, float(viol), float(scale), total)
