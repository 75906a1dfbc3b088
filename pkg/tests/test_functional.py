import math

import numpy as np
import pytest

from chaoslab.chaos.functional import (
    ChaosFunctional,
    OUOperator,
    chaos_inner,
    divergence,
    eval_chaos,
    expected_inner,
    malliavin_derivative,
    ou_apply,
    poincare_sides,
    random_functional,
)
from chaoslab.core.tensors import HilbertSpec, SymmetricKernel
from chaoslab.utils.error_handling import DimensionError, DomainError


def _functional(seed=0, m=3, p=2, order=3, centered=False):
    spec = HilbertSpec.euclidean(m, p)
    return random_functional(spec, order, np.random.default_rng(seed), centered=centered)


def test_first_chaos_is_linear():
    spec = HilbertSpec.euclidean(3, 2)
    coeffs = np.arange(6.0).reshape(3, 2)
    F = ChaosFunctional(spec, np.array([1.0, -1.0]), (SymmetricKernel(spec, 1, coeffs),))
    g = np.array([0.5, -1.0, 2.0])
    assert np.allclose(eval_chaos(F, g), g @ coeffs + F.mean)


def test_second_chaos_basis_value():
    spec = HilbertSpec.euclidean(2, 1)
    F = ChaosFunctional(spec, np.zeros(1), (SymmetricKernel.zeros(spec, 1), SymmetricKernel.basis(spec, (0, 0), 0)))
    g = np.array([[1.5, 0.3], [-0.2, 2.0]])
    assert np.allclose(eval_chaos(F, g)[:, 0], g[:, 0] ** 2 - 1.0)


def test_derivative_of_hermite_square():
    spec = HilbertSpec.euclidean(2, 1)
    F = ChaosFunctional(spec, np.zeros(1), (SymmetricKernel.zeros(spec, 1), SymmetricKernel.basis(spec, (0, 0), 0)))
    DF = malliavin_derivative(F, 1)
    assert DF.spec.p == 2
    # D(g0² - 1) = 2 g0 h0
    assert np.allclose(DF.kernel(1).coeffs, [[2.0, 0.0], [0.0, 0.0]])
    D2F = malliavin_derivative(F, 2)
    assert np.allclose(D2F.mean, [2.0, 0.0, 0.0, 0.0])


def test_generator_equals_minus_divergence_of_derivative():
    F = _functional()
    left = ou_apply(F, OUOperator.GENERATOR)
    right = divergence(malliavin_derivative(F, 1)).scale_orders([-1.0] * F.max_order, mean_factor=-1.0)
    assert left.max_abs_difference(right) <= 1e-12


def test_semigroup_and_pseudo_inverse():
    F = _functional(seed=1)
    twice = ou_apply(ou_apply(F, "P_t", 0.3), "P_t", 0.4)
    assert twice.max_abs_difference(ou_apply(F, OUOperator.SEMIGROUP, 0.7)) <= 1e-12
    round_trip = ou_apply(ou_apply(F, OUOperator.PSEUDO_INVERSE), OUOperator.GENERATOR)
    assert round_trip.max_abs_difference(F.centered()) <= 1e-12
    assert ou_apply(F, OUOperator.SEMIGROUP, 0.0).max_abs_difference(F) == 0.0


def test_divergence_of_constant_is_first_chaos():
    spec = HilbertSpec.euclidean(3, 2)
    phi = np.arange(6.0)
    integral = divergence(ChaosFunctional.constant(spec.lift(1), phi))
    assert integral.max_order == 1
    assert np.allclose(integral.kernel(1).coeffs, phi.reshape(3, 2))


def test_divergence_requires_lifted_spec():
    with pytest.raises(DimensionError):
        divergence(_functional())


def test_variance_matches_inner_product():
    F = _functional(seed=2)
    op, total = chaos_inner(F, F)
    assert np.allclose(np.diag(op.entries), F.variance())
    assert expected_inner(F, F) == pytest.approx(float(F.mean @ F.mean) + total)


def test_poincare():
    F = _functional(seed=3)
    var, grad = poincare_sides(F)
    assert var < grad
    var1, grad1 = poincare_sides(F.truncated(1))
    assert var1 == pytest.approx(grad1, abs=1e-12)


def test_construction_errors():
    spec = HilbertSpec.euclidean(2, 2)
    with pytest.raises(DimensionError):
        ChaosFunctional(spec, np.zeros(3))
    with pytest.raises(DimensionError):
        ChaosFunctional(spec, np.zeros(2), (SymmetricKernel.zeros(spec, 2),))
    with pytest.raises(DomainError):
        ou_apply(_functional(), OUOperator.SEMIGROUP, -1.0)
    with pytest.raises(DomainError):
        malliavin_derivative(_functional(), 3)


def test_duality():
    spec = HilbertSpec(3, 2, np.array([0.4, 1.6]))
    rng = np.random.default_rng(7)
    G = random_functional(spec, 3, rng, centered=False)
    V = random_functional(spec.lift(1), 2, rng, centered=False)
    lhs = expected_inner(malliavin_derivative(G, 1), V)
    rhs = expected_inner(G, divergence(V))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_derivative_matches_finite_differences():
    spec = HilbertSpec(3, 2, np.array([0.4, 1.6]))
    rng = np.random.default_rng(8)
    F = random_functional(spec, 3, rng, centered=False)
    g = rng.standard_normal(3)
    gradient = eval_chaos(malliavin_derivative(F, 1), g).reshape(3, 2)
    h = 1e-5
    for j in range(3):
        step = np.zeros(3)
        step[j] = h
        difference = (eval_chaos(F, g + step) - eval_chaos(F, g - step)) / (2 * h)
        assert np.allclose(difference, gradient[j], rtol=1e-6, atol=1e-8)


def test_derivative_of_mixed_second_chaos():
    spec = HilbertSpec.euclidean(2, 1)
    # I_2(sym h_0 ⊗ h_1) = g_0 g_1
    F = ChaosFunctional(spec, np.zeros(1), (SymmetricKernel.zeros(spec, 1), SymmetricKernel.basis(spec, (0, 1), 0)))
    g = np.array([0.7, -1.3])
    assert eval_chaos(F, g)[0] == pytest.approx(g[0] * g[1])
    assert np.allclose(eval_chaos(malliavin_derivative(F, 1), g), [g[1], g[0]])


def test_chaoses_of_different_order_are_orthogonal():
    spec = HilbertSpec.euclidean(3, 2)
    rng = np.random.default_rng(9)
    first = random_functional(spec, 1, rng)
    second = random_functional(spec, 2, rng)
    second = ChaosFunctional(spec, np.zeros(2), (SymmetricKernel.zeros(spec, 1), second.kernel(2)))
    op, total = chaos_inner(first, second)
    assert total == 0.0
    assert np.all(op.entries == 0.0)


def test_pseudo_inverse_contracts_derivative_norm():
    F = _functional(seed=10, centered=True)
    _, grad = poincare_sides(F)
    _, grad_inverse = poincare_sides(ou_apply(F, OUOperator.PSEUDO_INVERSE))
    assert grad_inverse < grad
    assert poincare_sides(ou_apply(F.truncated(1), OUOperator.PSEUDO_INVERSE))[1] == pytest.approx(
        poincare_sides(F.truncated(1))[1], rel=1e-12)


def test_random_functional_order_variance_scaling():
    spec = HilbertSpec.euclidean(4, 100)
    F = random_functional(spec, 3, np.random.default_rng(11), decay=0.5)
    for n in range(1, 4):
        per_coordinate = math.factorial(n) * F.kernel(n).norm_squared() / spec.p
        assert per_coordinate == pytest.approx(0.25 ** (n - 1), rel=0.3)
