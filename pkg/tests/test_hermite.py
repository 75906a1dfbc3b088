import math

import numpy as np
import pytest

from chaoslab.chaos.hermite import (
    composite_gauss_legendre,
    gauss_hermite,
    gauss_legendre,
    gaussian_lp_norm,
    hermite_eval,
    hermite_expand,
    hermite_table,
)
from chaoslab.utils.error_handling import DomainError


def test_gauss_hermite_moments():
    x, w = gauss_hermite(20)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.sum(w * x ** 2) == pytest.approx(1.0, abs=1e-13)
    assert np.sum(w * x ** 4) == pytest.approx(3.0, abs=1e-12)


def test_hermite_orthogonality():
    x, w = gauss_hermite(12)
    table = hermite_table(6, x)
    gram = (table * w) @ table.T
    expected = np.diag([math.factorial(q) for q in range(7)])
    assert np.allclose(gram, expected, atol=1e-10)


def test_hermite_eval_matches_table():
    x = np.linspace(-2.0, 2.0, 7)
    assert np.allclose(hermite_eval(3, x), x ** 3 - 3 * x)
    assert np.allclose(hermite_table(3, x)[3], hermite_eval(3, x))


def test_hermite_expand_of_square():
    coeffs = hermite_expand(lambda x: x ** 2, Q=6)
    assert np.allclose(coeffs.c, [1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0], atol=1e-12)
    assert coeffs.hermite_rank() == 2
    assert abs(coeffs.bessel_defect) < 1e-12
    assert coeffs.to_dict()["hermite_rank"] == 2


def test_hermite_rank_of_constant_is_none():
    assert hermite_expand(lambda x: np.ones_like(x), Q=3).hermite_rank() is None


def test_hermite_expand_rejects_small_quadrature():
    with pytest.raises(DomainError):
        hermite_expand(np.sin, Q=10, quad_order=8)


def test_gaussian_l4_norm():
    assert gaussian_lp_norm(lambda x: 2.0 * x, 4.0) == pytest.approx(2.0 * 3.0 ** 0.25, rel=1e-13)


def test_gauss_legendre_rules():
    x, w = gauss_legendre(0.0, 2.0, 5)
    assert w.sum() == pytest.approx(2.0)
    assert np.sum(w * x ** 3) == pytest.approx(4.0)
    u, v = composite_gauss_legendre([1.0, -1.0, 0.0, 0.0], 4)
    assert np.sum(v * np.abs(u)) == pytest.approx(1.0, abs=1e-14)


def test_hermite_expand_of_basis_functions():
    linear = hermite_expand(lambda x: x, Q=4)
    assert np.allclose(linear.c, [0.0, 1.0, 0.0, 0.0, 0.0], atol=1e-12)
    assert linear.hermite_rank() == 1
    square = hermite_expand(lambda x: x ** 2 - 1.0, Q=4)
    assert np.allclose(square.c, [0.0, 0.0, 1.0, 0.0, 0.0], atol=1e-12)
    assert square.hermite_rank() == 2
