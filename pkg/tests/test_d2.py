import math

import numpy as np
import pytest

from chaoslab.bounds.d2 import (
    TestFunctional,
    chaos_sampler,
    cosine_dictionary,
    d2_lower_estimate,
    gaussian_sampler,
)
from chaoslab.chaos.functional import ChaosFunctional
from chaoslab.chaos.sampling import stream_rng
from chaoslab.core.tensors import HilbertSpec, SymmetricKernel
from chaoslab.utils.error_handling import DomainError, ErrorType


def test_admissible_amplitude():
    assert TestFunctional.admissible([0.5, 0.0], 0.0).c == 1.0
    assert TestFunctional.admissible([2.0, 0.0], 0.0).c == 0.25
    phi = TestFunctional.admissible([3.0, 4.0], 0.3)
    assert phi.c == pytest.approx(1.0 / 25.0)
    assert phi(np.zeros(2)) == pytest.approx(math.cos(0.3) / 25.0)


def test_gaussian_expectation_against_monte_carlo():
    cov = np.array([[1.0, 0.3], [0.3, 0.5]])
    phi = TestFunctional.admissible([0.8, -0.4], 0.7)
    samples = gaussian_sampler(cov)(200_000, stream_rng(2, "cos"))
    assert phi(samples).mean() == pytest.approx(phi.gaussian_expectation(cov), abs=1e-2)


def test_dictionary():
    dictionary = cosine_dictionary(3, stream_rng(0, "dict"), size=8, radii=(1.0, 2.0))
    assert len(dictionary) == 8
    assert np.linalg.norm(dictionary[1].a) == pytest.approx(2.0)
    with pytest.raises(DomainError) as exc:
        cosine_dictionary(3, stream_rng(0, "dict"), size=0)
    assert exc.value.error_type == ErrorType.EMPTY_INPUT


def test_identical_laws_give_zero():
    sampler = gaussian_sampler(np.eye(2))
    dictionary = cosine_dictionary(2, stream_rng(0, "dict"), size=16)
    estimate = d2_lower_estimate(sampler, sampler, dictionary, 1000, seed=3)
    assert estimate.value == 0.0
    assert estimate.stderr == 0.0


def test_second_chaos_is_detected():
    spec = HilbertSpec.euclidean(1, 1)
    # (g² - 1)/√2 has unit variance but is not Gaussian
    F = ChaosFunctional(spec, np.zeros(1), (SymmetricKernel.zeros(spec, 1),
                                            SymmetricKernel.basis(spec, (0, 0), 0, 1.0 / math.sqrt(2.0))))
    dictionary = cosine_dictionary(1, stream_rng(0, "dict"), size=32)
    estimate = d2_lower_estimate(chaos_sampler(F), gaussian_sampler(np.eye(1)), dictionary, 20_000, seed=1)
    assert estimate.value > 4 * estimate.stderr
    assert estimate.to_dict()["n_mc"] == 20_000


def test_estimate_errors():
    sampler = gaussian_sampler(np.eye(1))
    with pytest.raises(DomainError):
        d2_lower_estimate(sampler, sampler, [], 10)
    with pytest.raises(DomainError):
        d2_lower_estimate(sampler, sampler, cosine_dictionary(1, stream_rng(0, "d"), 2), 1)


def test_variance_mismatch_is_detected():
    dictionary = cosine_dictionary(1, stream_rng(0, "dict"), size=64)
    estimate = d2_lower_estimate(gaussian_sampler(np.eye(1)), gaussian_sampler(4.0 * np.eye(1)), dictionary,
                                 20_000, seed=2)
    assert estimate.value > 0.05
    assert estimate.stderr < estimate.value / 5
