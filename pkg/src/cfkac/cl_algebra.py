"""Arithmetic on real 2x2 matrices of class C_L.

A matrix of class C_L has the shape ``[[a, -b], [b, a]]``. Only ``(a, b)`` is
stored, so every :class:`CL2` value has that shape by construction. The map
``a + ib -> CL2(a, b)`` is a field isomorphism onto the complex numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SingularMatrixError(ZeroDivisionError):
    """Raised when inverting a C_L matrix with a^2 + b^2 == 0."""


@dataclass(frozen=True)
class CL2:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"non-finite C_L entries ({self.a}, {self.b})")

    @property
    def det(self) -> float:
        return self.a * self.a + self.b * self.b

    def __add__(self, other: CL2) -> CL2:
        return cl_add(self, other)

    def __mul__(self, other: CL2) -> CL2:
        return cl_mul(self, other)


def cl_add(x: CL2, y: CL2) -> CL2:
    return CL2(x.a + y.a, x.b + y.b)


def cl_mul(x: CL2, y: CL2) -> CL2:
    return CL2(x.a * y.a - x.b * y.b, x.a * y.b + x.b * y.a)


def cl_scale(lam: float, x: CL2) -> CL2:
    return CL2(lam * x.a, lam * x.b)


def cl_inv(x: CL2) -> CL2:
    d = x.det
    if d == 0.0:
        raise SingularMatrixError(f"C_L matrix ({x.a}, {x.b}) is singular")
    return CL2(x.a / d, -x.b / d)


def cl_from_complex(z: complex) -> CL2:
    z = complex(z)
    return CL2(z.real, z.imag)


def cl_to_complex(x: CL2) -> complex:
    return complex(x.a, x.b)


def expand_to_matrix(x: CL2) -> np.ndarray:
    """Full 2x2 view, for shape assertions and debugging."""
    return np.array([[x.a, -x.b], [x.b, x.a]])


def cl_distance(m) -> float:
    """Distance of an arbitrary real 2x2 matrix from the C_L class.

    Returns ``(|m11 - m22| + |m12 + m21|) / 2``, which is zero exactly when
    ``m`` has the C_L shape (equivalently, when the Cauchy-Riemann equations
    hold for a Jacobian ``m``).
    """
    m = np.asarray(m, dtype=float)
    return 0.5 * (abs(m[0, 0] - m[1, 1]) + abs(m[0, 1] + m[1, 0]))


def nearest_cl(m) -> CL2:
    """Orthogonal (Frobenius) projection of a real 2x2 matrix onto C_L."""
    m = np.asarray(m, dtype=float)
    return CL2(0.5 * (m[0, 0] + m[1, 1]), 0.5 * (m[1, 0] - m[0, 1]))
