import itertools
import math

import numpy as np
import pytest

from chaoslab.core.tensors import (
    HilbertSpec,
    SymmetricKernel,
    contract_r,
    contraction_norm,
    inner,
    multi_indices,
    multiplicities,
    row_of,
    symmetrize,
)
from chaoslab.utils.error_handling import DimensionError, DomainError


def test_multiplicities_cover_all_tuples():
    for m, n in [(1, 3), (3, 2), (4, 3), (6, 4)]:
        assert multiplicities(m, n).sum() == m ** n
        assert multi_indices(m, n).shape == (math.comb(m + n - 1, n), n)


def test_row_of_is_permutation_invariant():
    rows = row_of(4, np.array([[0, 2, 3], [3, 0, 2], [2, 3, 0]]))
    assert rows[0] == rows[1] == rows[2]


def test_symmetrize_round_trip_and_norm():
    spec = HilbertSpec.euclidean(3, 2)
    raw = np.random.default_rng(0).standard_normal((3, 3, 3, 2))
    kernel = symmetrize(raw, spec)
    dense = kernel.to_dense()
    assert np.allclose(dense, np.transpose(dense, (1, 0, 2, 3)))
    assert np.allclose(dense, np.transpose(dense, (2, 1, 0, 3)))
    assert kernel.norm_squared() == pytest.approx(float(np.sum(dense ** 2)), rel=1e-13)
    again = SymmetricKernel.from_dense(spec, dense)
    assert np.array_equal(again.coeffs, kernel.coeffs)


def test_symmetrize_rejects_wrong_shape():
    spec = HilbertSpec.euclidean(3, 2)
    with pytest.raises(DimensionError):
        symmetrize(np.zeros((3, 2, 2)), spec)
    with pytest.raises(DimensionError):
        symmetrize(np.zeros((3, 3, 2)), spec, order=3)


def test_basis_kernel_has_unit_orbit_mass():
    spec = HilbertSpec.euclidean(3, 1)
    kernel = SymmetricKernel.basis(spec, (0, 1), 0)
    dense = kernel.to_dense()
    assert dense[0, 1, 0] == pytest.approx(0.5)
    assert dense[1, 0, 0] == pytest.approx(0.5)
    assert dense.sum() == pytest.approx(1.0)


def test_contractions():
    spec = HilbertSpec.euclidean(3, 1)
    rng = np.random.default_rng(1)
    f = symmetrize(rng.standard_normal((3, 3, 1)), spec)
    g = symmetrize(rng.standard_normal((3, 3, 1)), spec)
    full = contract_r(f, g, 2)
    assert full.shape == (1, 1)
    assert full[0, 0] == pytest.approx(inner(f, g), rel=1e-13)
    outer = contract_r(f, g, 0)
    assert outer.shape == (3, 3, 3, 3, 1, 1)
    assert contraction_norm(f, g, 0) == pytest.approx(f.norm() * g.norm(), rel=1e-13)
    with pytest.raises(DomainError):
        contract_r(f, g, 3)


def test_spec_lift_and_coordinates():
    spec = HilbertSpec(2, 3, np.array([0.2, 0.3, 0.5]))
    lifted = spec.lift(2)
    assert lifted.p == 12 and lifted.slots == 2
    assert lifted.unlift().same_as(spec.lift(1))
    assert lifted.unlift().unlift().same_as(spec)
    values = np.array([1.0, -2.0, 4.0])
    assert np.allclose(spec.to_node_values(spec.to_coordinates(values)), values)
    with pytest.raises(DimensionError):
        spec.unlift()


def test_spec_rejects_bad_weights():
    with pytest.raises(DomainError):
        HilbertSpec(2, 2, np.array([1.0, 0.0]))
    with pytest.raises(DimensionError):
        HilbertSpec(2, 3, np.ones(2))


def test_symmetrize_is_idempotent_permutation_average():
    spec = HilbertSpec.euclidean(3, 1)
    raw = np.random.default_rng(4).standard_normal((3, 3, 3, 1))
    kernel = symmetrize(raw, spec)
    expected = np.zeros_like(raw)
    for idx in itertools.product(range(3), repeat=3):
        expected[idx] = np.mean([raw[tuple(idx[k] for k in perm)] for perm in itertools.permutations(range(3))], axis=0)
    assert np.allclose(kernel.to_dense(), expected, atol=1e-14)
    again = symmetrize(kernel.to_dense(), spec, order=3)
    assert np.allclose(again.coeffs, kernel.coeffs, atol=1e-14)


def test_one_contraction_matches_index_loop():
    m, p = 3, 2
    spec = HilbertSpec.euclidean(m, p)
    rng = np.random.default_rng(5)
    f = symmetrize(rng.standard_normal((m, m, p)), spec)
    g = symmetrize(rng.standard_normal((m, m, m, p)), spec)
    fd, gd = f.to_dense(), g.to_dense()
    expected = np.zeros((m, m, m, p, p))
    for a, b, c, i, j, s in itertools.product(range(m), range(m), range(m), range(p), range(p), range(m)):
        expected[a, b, c, i, j] += fd[a, s, i] * gd[b, c, s, j]
    assert np.allclose(contract_r(f, g, 1), expected, atol=1e-13)


def test_one_contraction_of_basis_kernels():
    spec = HilbertSpec.euclidean(2, 1)
    diagonal = SymmetricKernel.basis(spec, (0, 0), 0)
    square = contract_r(diagonal, diagonal, 1)[..., 0, 0]
    assert np.array_equal(square, np.array([[1.0, 0.0], [0.0, 0.0]]))
    mixed = contract_r(diagonal, SymmetricKernel.basis(spec, (0, 1), 0), 1)[..., 0, 0]
    assert mixed[0, 1] == pytest.approx(0.5)
    assert mixed[0, 0] == 0.0
    assert np.all(mixed[1] == 0.0)


def test_contraction_norm_cauchy_schwarz():
    spec = HilbertSpec.euclidean(3, 3)
    rng = np.random.default_rng(6)
    for _ in range(100):
        f = symmetrize(rng.standard_normal((3, 3, 3)), spec)
        g = symmetrize(rng.standard_normal((3, 3, 3)), spec)
        for r in (0, 1, 2):
            assert contraction_norm(f, g, r) <= f.norm() * g.norm() * (1 + 1e-12)
