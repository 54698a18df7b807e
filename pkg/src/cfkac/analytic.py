"""Polynomial data in one complex variable and Cauchy-Riemann checks.

Terminal data ``h`` and the source term ``g~`` are complex polynomials. They
are entire, have exact derivatives of every order and finite Gaussian moments,
so no quadrature error enters the tests built on them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

MAX_DEGREE = 8


def _trim(c: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(c)
    return c[: nz[-1] + 1] if nz.size else c[:1]


@dataclass(frozen=True, eq=False)
class AnalyticPoly:
    """``sum_k coeffs[k] * x**k``, lowest degree first."""

    coeffs: np.ndarray

    def __init__(self, coeffs, max_degree: int = MAX_DEGREE):
        c = np.atleast_1d(np.asarray(coeffs, dtype=np.complex128)).copy()
        if c.ndim != 1 or c.size == 0:
            raise ValueError("polynomial coefficients must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite polynomial coefficient")
        c = _trim(c)
        if c.size - 1 > max_degree:
            raise ValueError(f"degree {c.size - 1} exceeds maximum {max_degree}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_pairs(cls, pairs) -> AnalyticPoly:
        """Build from ``[[re, im], ...]`` (the config-file encoding)."""
        arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0] + 1j * arr[:, 1])

    def to_pairs(self) -> list[list[float]]:
        return [[float(c.real), float(c.imag)] for c in self.coeffs]

    @classmethod
    def monomial(cls, k: int, c: complex = 1.0) -> AnalyticPoly:
        coeffs = np.zeros(k + 1, dtype=np.complex128)
        coeffs[k] = c
        return cls(coeffs)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0

    def __call__(self, x):
        return eval_poly(self, x)

    def __add__(self, other: AnalyticPoly) -> AnalyticPoly:
        n = max(self.coeffs.size, other.coeffs.size)
        c = np.zeros(n, dtype=np.complex128)
        c[: self.coeffs.size] += self.coeffs
        c[: other.coeffs.size] += other.coeffs
        return AnalyticPoly(c)

    def scale(self, s: complex) -> AnalyticPoly:
        return AnalyticPoly(self.coeffs * s)

    def shift(self, s: complex) -> AnalyticPoly:
        """Coefficients of ``x -> p(x + s)``, by exact binomial recombination."""
        return AnalyticPoly(taylor_shift(self.coeffs, s))

    def __repr__(self):
        return f"AnalyticPoly({self.coeffs.tolist()})"


def taylor_shift(c: np.ndarray, s: complex) -> np.ndarray:
    # new[j] = sum_{m>=j} c[m] * C(m, j) * s**(m-j)
    d = c.size
    out = np.zeros(d, dtype=np.complex128)
    for j in range(d):
        acc = 0j
        for m in range(d - 1, j - 1, -1):
            acc = acc * s + c[m] * math.comb(m, j)
        out[j] = acc
    return out


def eval_poly(p: AnalyticPoly, x):
    """Horner evaluation; works elementwise on arrays.

    Raises ``OverflowError`` when a finite argument yields a non-finite value.
    """
    x = np.asarray(x, dtype=np.complex128)
    c = p.coeffs
    acc = np.full(x.shape, c[-1], dtype=np.complex128)
    with np.errstate(over="ignore", invalid="ignore"):
        for ck in c[-2::-1]:
            acc = acc * x + ck
    if not np.all(np.isfinite(acc)):
        bad = np.isfinite(x) & ~np.isfinite(acc)
        if np.any(bad):
            raise OverflowError("polynomial value exceeds float64 range")
    return acc[()] if acc.ndim == 0 else acc


def diff_poly(p: AnalyticPoly, order: int = 1) -> AnalyticPoly:
    """Formal complex derivative of the given order."""
    if order < 0:
        raise ValueError("derivative order must be non-negative")
    c = p.coeffs
    for _ in range(order):
        if c.size == 1:
            return AnalyticPoly([0.0])
        c = c[1:] * np.arange(1, c.size)
    return AnalyticPoly(c)


class TimeVaryingPoly:
    """A polynomial per grid cell: ``g~(r, .)`` piecewise constant in time."""

    def __init__(self, polys: Sequence[AnalyticPoly]):
        self.polys = list(polys)
        if not self.polys:
            raise ValueError("TimeVaryingPoly needs at least one cell")

    @classmethod
    def constant(cls, p: AnalyticPoly, n_cells: int) -> TimeVaryingPoly:
        return cls([p] * n_cells)

    def __len__(self):
        return len(self.polys)

    def __getitem__(self, k: int) -> AnalyticPoly:
        return self.polys[k]

    @property
    def degree(self) -> int:
        return max(p.degree for p in self.polys)

    def diff(self, order: int = 1) -> TimeVaryingPoly:
        return TimeVaryingPoly([diff_poly(p, order) for p in self.polys])

    def coarsen(self, factor: int) -> TimeVaryingPoly:
        return TimeVaryingPoly(self.polys[::factor])


class SpaceTimePoly:
    """``F(t, x) = sum_{j,m} c[j, m] t**j x**m``: analytic in x, smooth in t."""

    def __init__(self, coeffs):
        if isinstance(coeffs, (list, tuple)) and coeffs and all(
                isinstance(r, (list, tuple)) for r in coeffs):
            width = max(len(r) for r in coeffs)  # ragged rows are zero-padded
            coeffs = [list(r) + [0] * (width - len(r)) for r in coeffs]
        c = np.atleast_2d(np.asarray(coeffs, dtype=np.complex128))
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficient")
        if c.shape[1] - 1 > MAX_DEGREE:
            raise ValueError(f"x-degree {c.shape[1] - 1} exceeds maximum {MAX_DEGREE}")
        self.coeffs = c

    @classmethod
    def from_poly(cls, p: AnalyticPoly) -> SpaceTimePoly:
        return cls(p.coeffs[None, :])

    def at(self, t: float) -> AnalyticPoly:
        powers = t ** np.arange(self.coeffs.shape[0])
        return AnalyticPoly(powers @ self.coeffs)

    def __call__(self, t: float, x):
        return eval_poly(self.at(t), x)


def as_real_pair(f: Callable[[complex], complex]):
    """Wrap ``f: C -> C`` as ``(x1, x2) -> (u, v)``."""

    def pair(x1, x2):
        w = f(complex(x1, x2))
        return w.real, w.imag

    return pair


def cr_residual(f, x: complex, h: float = 1e-5) -> float:
    """Cauchy-Riemann defect of a real-pair function at ``x``.

    ``f(x1, x2)`` returns ``(u, v)``. Central differences of step ``h`` give
    ``max(|u_x1 - v_x2|, |u_x2 + v_x1|)``.
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    x1, x2 = float(np.real(x)), float(np.imag(x))
    up1, vp1 = f(x1 + h, x2)
    um1, vm1 = f(x1 - h, x2)
    up2, vp2 = f(x1, x2 + h)
    um2, vm2 = f(x1, x2 - h)
    u_x1 = (up1 - um1) / (2 * h)
    v_x1 = (vp1 - vm1) / (2 * h)
    u_x2 = (up2 - um2) / (2 * h)
    v_x2 = (vp2 - vm2) / (2 * h)
    return float(max(abs(u_x1 - v_x2), abs(u_x2 + v_x1)))
