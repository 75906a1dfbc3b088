import numpy as np
import pytest

from chaoslab.core.operators import KOperator, hs_distance, k_operator_norms, psd_square_root_factor
from chaoslab.core.tensors import HilbertSpec
from chaoslab.utils.error_handling import DimensionError, DomainError, ErrorType


def test_from_kernel_hs_norm_is_weighted():
    weights = np.array([0.1, 0.4, 0.5])
    spec = HilbertSpec(1, 3, weights)
    kernel = np.minimum.outer([0.2, 0.5, 0.9], [0.2, 0.5, 0.9])
    op = KOperator.from_kernel(spec, kernel)
    expected = np.sqrt(np.sum(np.outer(weights, weights) * kernel ** 2))
    assert k_operator_norms(op).hs == pytest.approx(expected, rel=1e-14)
    assert k_operator_norms(op).trace == pytest.approx(float(np.sum(weights * np.diag(kernel))))


def test_norms_of_diagonal_operator():
    norms = k_operator_norms(np.diag([3.0, -1.0, 2.0]))
    assert norms.trace == pytest.approx(4.0)
    assert norms.hs == pytest.approx(np.sqrt(14.0))
    assert norms.opnorm == pytest.approx(3.0)


def test_psd_square_root_factor():
    a = np.random.default_rng(2).standard_normal((4, 4))
    op = KOperator(a @ a.T)
    factor = psd_square_root_factor(op)
    assert np.allclose(factor @ factor.T, op.entries, atol=1e-12)


def test_psd_square_root_rejects_indefinite():
    with pytest.raises(DomainError) as err:
        psd_square_root_factor(KOperator(np.diag([1.0, -0.5])))
    assert err.value.error_type == ErrorType.NOT_PSD


def test_operator_shape_checks():
    with pytest.raises(DimensionError):
        KOperator(np.zeros((2, 3)))
    with pytest.raises(DimensionError):
        hs_distance(np.zeros((2, 2)), np.zeros((3, 3)))
    assert hs_distance(np.eye(2), np.zeros((2, 2))) == pytest.approx(np.sqrt(2.0))


def test_norm_ordering_on_random_operators():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.standard_normal((5, 5))
        psd = k_operator_norms(a @ a.T)
        assert psd.opnorm <= psd.hs * (1 + 1e-12)
        assert psd.hs <= psd.trace * (1 + 1e-12)
        general = k_operator_norms(a)
        assert general.opnorm <= general.hs * (1 + 1e-12)


def test_identity_and_rank_one_norms():
    identity = k_operator_norms(np.eye(3))
    assert (identity.trace, identity.hs, identity.opnorm) == pytest.approx((3.0, np.sqrt(3.0), 1.0))
    a = np.array([0.0, 1.2, -1.6])
    rank_one = k_operator_norms(np.outer(a, a))
    assert (rank_one.trace, rank_one.hs, rank_one.opnorm) == pytest.approx((4.0, 4.0, 4.0))
