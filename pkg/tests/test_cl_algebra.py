from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfkac.cl_algebra import (CL2, SingularMatrixError, cl_add, cl_distance, cl_from_complex,
                              cl_inv, cl_mul, cl_scale, cl_to_complex, expand_to_matrix,
                              nearest_cl)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
pairs = st.builds(CL2, finite, finite)


def test_add_examples():
    assert cl_add(CL2(1, 2), CL2(3, 4)) == CL2(4, 6)
    assert cl_add(CL2(5.5, -2), CL2(0, 0)) == CL2(5.5, -2)
    assert cl_add(CL2(1, -1), CL2(-1, 1)) == CL2(0, 0)


def test_mul_examples():
    assert cl_mul(CL2(1, 2), CL2(3, 4)) == CL2(-5, 10)
    assert cl_mul(CL2(2.5, -7), CL2(1, 0)) == CL2(2.5, -7)
    assert cl_mul(CL2(0, 1), CL2(0, 1)) == CL2(-1, 0)


def test_inv_examples():
    inv = cl_inv(CL2(3, 4))
    assert inv.a == pytest.approx(0.12, abs=1e-15) and inv.b == pytest.approx(-0.16, abs=1e-15)
    assert cl_inv(CL2(1, 0)) == CL2(1, 0)
    with pytest.raises(SingularMatrixError):
        cl_inv(CL2(0, 0))
    with pytest.raises(ZeroDivisionError):
        cl_inv(CL2(0.0, -0.0))


def test_complex_roundtrip_examples():
    assert cl_from_complex(1 + 2j) == CL2(1, 2)
    for z in (0j, 1 + 2j, -3.5 + 1e-9j, 1e300 - 1e-300j):
        assert cl_to_complex(cl_from_complex(z)) == z


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        CL2(float("nan"), 0)
    with pytest.raises(ValueError):
        CL2(0, float("inf"))


def test_isomorphism_on_random_pairs():
    # complex arithmetic is the oracle
    rng = np.random.default_rng(1)
    u = rng.uniform(-10, 10, (10_000, 4))
    for a, b, c, d in u:
        z1, z2 = complex(a, b), complex(c, d)
        p = cl_mul(CL2(a, b), CL2(c, d))
        assert abs(p.a - (z1 * z2).real) <= 1e-12 and abs(p.b - (z1 * z2).imag) <= 1e-12
        q = cl_inv(CL2(a, b))
        assert abs(cl_to_complex(q) - 1 / z1) <= 1e-12


def test_expand_and_distance():
    m = expand_to_matrix(CL2(2, 3))
    assert np.array_equal(m, [[2, -3], [3, 2]])
    assert cl_distance(m) == 0.0
    assert cl_distance([[1, 0], [0, -1]]) == 1.0
    assert nearest_cl([[1, 5], [3, 1]]) == CL2(1, -1)


@given(pairs, pairs)
def test_mul_commutes_exactly(x, y):
    assert cl_mul(x, y) == cl_mul(y, x)


@given(pairs, pairs, pairs)
def test_ring_laws(x, y, z):
    lhs, rhs = cl_mul(x, cl_add(y, z)), cl_add(cl_mul(x, y), cl_mul(x, z))
    tol = 1e-9 * (1 + abs(cl_to_complex(x)) * (abs(cl_to_complex(y)) + abs(cl_to_complex(z))))
    assert abs(cl_to_complex(lhs) - cl_to_complex(rhs)) <= tol
    assoc = cl_to_complex(cl_add(cl_add(x, y), z)) - cl_to_complex(cl_add(x, cl_add(y, z)))
    assert abs(assoc) <= 1e-12 * 3e3


@given(pairs)
def test_inverse_law(x):
    if x.det < 1e-6:
        return
    one = cl_to_complex(cl_mul(x, cl_inv(x)))
    assert abs(one - 1) <= 1e-12


@given(pairs)
def test_matrix_product_matches(x):
    y = CL2(0.3, -1.7)
    assert np.allclose(expand_to_matrix(x) @ expand_to_matrix(y), expand_to_matrix(x * y),
                       rtol=1e-12, atol=1e-9)
    assert cl_distance(expand_to_matrix(x)) == 0.0


@given(finite, pairs)
def test_scale_is_real_multiplication(lam, x):
    assert cl_scale(lam, x) == CL2(lam * x.a, lam * x.b)
    assert abs(cl_to_complex(cl_scale(lam, x)) - cl_to_complex(cl_mul(CL2(lam, 0.0), x))) <= 1e-9
