import math

import numpy as np
import pytest

from chaoslab.bounds.stein import (
    contraction_square_norm,
    covariance_operator,
    gamma_mean,
    gamma_sample,
    improved_bounds,
    msbc_bound,
    operator_norm_flattened,
    second_order_bounds,
)
from chaoslab.chaos.functional import ChaosFunctional, random_functional
from chaoslab.chaos.sampling import GaussianDraw, stream_rng
from chaoslab.core.tensors import HilbertSpec, SymmetricKernel
from chaoslab.utils.error_handling import DimensionError, DomainError, ErrorType


def _square():
    """``g² - 1`` on a one-dimensional ℌ."""
    spec = HilbertSpec.euclidean(1, 1)
    return ChaosFunctional(spec, np.zeros(1), (SymmetricKernel.zeros(spec, 1), SymmetricKernel.basis(spec, (0, 0), 0)))


def _gaussian():
    spec = HilbertSpec.euclidean(3, 2)
    return ChaosFunctional(spec, np.zeros(2), (SymmetricKernel(spec, 1, np.arange(6.0).reshape(3, 2)),))


def test_gamma_of_square():
    draw = GaussianDraw(np.array([1.5]))
    assert gamma_sample(_square(), draw).matrix == pytest.approx(np.array([[2.0 * 1.5 ** 2]]))
    batch = GaussianDraw(np.array([[0.5], [2.0]]))
    assert gamma_sample(_square(), batch).matrix[:, 0, 0] == pytest.approx([0.5, 8.0])
    with pytest.raises(DimensionError):
        gamma_sample(_square(), GaussianDraw(np.zeros(2)))


def test_gaussian_functional_has_zero_bounds():
    F = _gaussian()
    S = covariance_operator(F)
    assert np.allclose(S.entries, np.arange(6.0).reshape(3, 2).T @ np.arange(6.0).reshape(3, 2))
    assert msbc_bound(F, S, 100).msbc == pytest.approx(0.0, abs=1e-10)
    second = second_order_bounds(F, 100)
    assert second.thm1 == 0.0 and second.thm2 == 0.0
    improved = improved_bounds(F, 100)
    assert improved.mb1 == 0.0 and improved.mb2 == 0.0


def test_msbc_of_square():
    result = msbc_bound(_square(), np.array([[2.0]]), 20_000, seed=5)
    assert result.msbc == pytest.approx(math.sqrt(2.0), rel=0.06)
    assert result.cov_gap == 0.0
    assert result.msbc <= result.gamma_term + result.cov_gap + 1e-12


def test_second_order_of_square():
    bounds = second_order_bounds(_square(), 20_000, seed=5)
    assert bounds.thm1 == pytest.approx(2.0 * 48.0 ** 0.25, rel=0.05)
    assert bounds.thm1 == pytest.approx(bounds.thm2, rel=1e-10)
    assert bounds.per_draw_ordered


def test_random_functional_bounds_are_ordered():
    spec = HilbertSpec.euclidean(3, 2)
    F = random_functional(spec, 3, stream_rng(9, "stein"))
    second = second_order_bounds(F, 500, seed=1)
    assert second.per_draw_ordered
    assert second.thm1 <= second.thm2 * (1 + 1e-10)
    improved = improved_bounds(F, 500, seed=1)
    assert 0.0 <= improved.mb2 <= improved.mb1 * (1 + 1e-10)


def test_gamma_mean_estimates_covariance():
    spec = HilbertSpec.euclidean(2, 2)
    F = random_functional(spec, 2, stream_rng(4, "stein"))
    estimate = gamma_mean(F, 20_000, seed=2)
    z = estimate.z_scores(covariance_operator(F))
    assert z.max() < 5.0


def test_bounds_reject_bad_input():
    spec = HilbertSpec.euclidean(2, 1)
    shifted = random_functional(spec, 2, stream_rng(0, "x"), centered=False)
    with pytest.raises(DomainError) as exc:
        msbc_bound(shifted, np.eye(1), 10)
    assert exc.value.error_type == ErrorType.NONZERO_MEAN
    with pytest.raises(DomainError):
        second_order_bounds(shifted.centered(), 1)
    with pytest.raises(DimensionError):
        msbc_bound(shifted.centered(), np.eye(2), 10)


def test_norm_helpers():
    second = np.zeros((1, 2, 2, 1))
    second[0, 0, 0, 0] = 3.0
    assert operator_norm_flattened(second)[0] == pytest.approx(3.0)
    assert contraction_square_norm(second)[0] == pytest.approx(81.0)


def test_contraction_equals_trace_identity():
    rng = np.random.default_rng(8)
    raw = rng.standard_normal((3, 4, 4, 2))
    second = 0.5 * (raw + raw.transpose(0, 2, 1, 3))
    slices = [[second[k, :, :, i] for i in range(2)] for k in range(3)]
    expected = [sum(np.trace(a @ a @ b @ b) for a in s for b in s) for s in slices]
    assert np.allclose(contraction_square_norm(second), expected)
    top = [np.linalg.eigvalsh(sum(a @ a for a in s)).max() for s in slices]
    assert np.allclose(operator_norm_flattened(second) ** 2, top)
    assert np.all(operator_norm_flattened(second) ** 4 <= contraction_square_norm(second) * (1 + 1e-12))


def test_msbc_against_zero_covariance():
    spec = HilbertSpec.euclidean(2, 2)
    F = ChaosFunctional(spec, np.zeros(2), (SymmetricKernel.basis(spec, (0,), 0),))
    assert msbc_bound(F, np.zeros((2, 2)), 50).msbc == pytest.approx(0.5, rel=1e-12)
