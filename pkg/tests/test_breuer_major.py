import math

import numpy as np
import pytest

from chaoslab.apps.breuer_major import (
    BMExperiment,
    KernelShape,
    MovingAverageModel,
    absolute_covariance_integral,
    bm_theorem_bound,
    boundary_moment,
    cell_overlap,
    covariance_CT,
    covariance_matrix_Cinf,
    discrete_covariance,
    expand_f,
    fitted_slope,
    majorant_integral,
    sigma_limit,
    sigma_squared,
    simulate_FT,
    subordinating_function,
)
from chaoslab.chaos.hermite import gauss_legendre
from chaoslab.chaos.sampling import stream_rng
from chaoslab.utils.error_handling import DomainError, ErrorType


def _hermite2():
    f = subordinating_function("hermite2")
    return f, expand_f(f, Q=4)


def test_presets_are_hermite_polynomials():
    f = subordinating_function("hermite3")
    assert np.allclose(f.coef, [0.0, -3.0, 0.0, 1.0])
    assert np.allclose(subordinating_function([1.0, 2.0]).coef, [1.0, 2.0])
    with pytest.raises(DomainError):
        subordinating_function("sine")
    with pytest.raises(DomainError) as exc:
        subordinating_function([])
    assert exc.value.error_type == ErrorType.EMPTY_INPUT


@pytest.mark.parametrize("shape", list(KernelShape))
def test_kernels_are_normalised(shape):
    model = MovingAverageModel(shape)
    assert model.rho(0.0) == pytest.approx(1.0, rel=1e-10)
    assert model.rho(1.5) == 0.0
    assert np.sum(model.taps() ** 2) == pytest.approx(1.0)


def test_indicator_correlation():
    model = MovingAverageModel()
    assert np.allclose(model.rho(np.array([0.25, -0.5, 0.9])), [0.75, 0.5, 0.1])
    assert model.rho_l1() == pytest.approx(1.0)
    assert model.g_star() == pytest.approx(1.0)


def test_time_step_must_resolve_support():
    with pytest.raises(DomainError) as exc:
        MovingAverageModel(dt=0.25)
    assert exc.value.error_type == ErrorType.GRID


def test_hermite2_limit_variance():
    model = MovingAverageModel()
    _, coeffs = _hermite2()
    assert sigma_squared(model, coeffs) == pytest.approx(8.0 / 3.0, rel=1e-12)
    assert sigma_limit(model, coeffs) == pytest.approx(math.sqrt(8.0 / 3.0), rel=1e-12)
    m1, majorant = absolute_covariance_integral(model, coeffs)
    assert m1 == pytest.approx(4.0 / 3.0, rel=1e-12)
    assert majorant == pytest.approx(2.0, rel=1e-12)


def test_boundary_identity():
    model = MovingAverageModel()
    _, coeffs = _hermite2()
    moment = boundary_moment(model, coeffs)
    assert moment == pytest.approx(1.0 / 3.0, rel=1e-12)
    for T in (1.0, 3.0, 10.0):
        gap = sigma_squared(model, coeffs) - covariance_CT(model, coeffs, 1.0, 1.0, T)
        assert T * gap == pytest.approx(moment, rel=1e-10)


def test_covariance_edge_cases():
    model = MovingAverageModel()
    _, coeffs = _hermite2()
    assert covariance_CT(model, coeffs, 0.0, 1.0, 2.0) == 0.0
    with pytest.raises(DomainError):
        covariance_CT(model, coeffs, 1.0, 1.0, 0.0)
    nodes = np.array([0.25, 0.5])
    assert np.allclose(covariance_matrix_Cinf(model, coeffs, nodes), 8.0 / 3.0 * np.array([[0.25, 0.25], [0.25, 0.5]]))


def test_theorem_bound_constant():
    f, _ = _hermite2()
    model = MovingAverageModel()
    assert bm_theorem_bound(model, f, 4.0) == pytest.approx(3.0 ** 0.75, rel=1e-10)
    assert bm_theorem_bound(model, subordinating_function("linear"), 4.0) == 0.0


def test_cell_overlap():
    edges = np.array([-1.0, 0.0, 1.0])
    assert np.allclose(cell_overlap(edges, np.array([0.5, 2.0])), [[0.5, 0.5], [1.0, 1.0]])


def test_simulation_matches_discrete_covariance():
    model = MovingAverageModel(dt=1.0 / 16.0)
    f, coeffs = _hermite2()
    nodes = np.array([0.5, 1.0])
    samples = simulate_FT(model, f, coeffs, 2.0, nodes, stream_rng(0, "bm"), 20_000)
    exact = discrete_covariance(model, coeffs, 2.0, nodes)
    assert samples.shape == (20_000, 2)
    assert np.cov(samples.T) == pytest.approx(exact, rel=0.1)


def test_majorant_integral_is_bounded():
    model = MovingAverageModel()
    nodes, weights = gauss_legendre(0.0, 1.0, 4)
    T = 2.0
    assert 0.0 < majorant_integral(model, T, nodes, weights) <= 1.05 * model.g_star() ** 6 * T


def test_small_experiment():
    f, _ = _hermite2()
    experiment = BMExperiment(f, [1.0, 2.0], MovingAverageModel(dt=1.0 / 16.0), n_nodes=4, n_mc=400,
                              seed=3, Q=4, dictionary_size=8)
    rows = experiment.run()
    assert [row.T for row in rows] == [1.0, 2.0]
    assert rows[0].bound == pytest.approx(math.sqrt(2.0) * rows[1].bound)
    assert all(row.sigma2 == pytest.approx(8.0 / 3.0) for row in rows)
    assert rows[1].hs_CT_Cinf <= rows[0].hs_CT_Cinf
    assert all(abs(row.var_z) < 5.0 for row in rows)
    with pytest.raises(DomainError):
        BMExperiment(f, [1.0], n_mc=1)


def test_fitted_slope():
    assert fitted_slope([1.0, 4.0, 16.0], [1.0, 0.5, 0.25]) == pytest.approx(-0.5)
