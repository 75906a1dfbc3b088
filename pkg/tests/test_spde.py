import math

import numpy as np
import pytest

from chaoslab.apps.spde import (
    NoiseSpec,
    PAMChaosModel,
    a_star_majorant,
    duffy_simplex,
    heat_kernel,
    overlap_ratio,
    spde_bound,
    spde_rows,
)
from chaoslab.utils.error_handling import DomainError, ErrorType


def _small_model(**kwargs):
    return PAMChaosModel(T=1.0, N_trunc=2, time_nodes=(6, 4), k_nodes=3, **kwargs)


def test_heat_kernel():
    assert heat_kernel(1.0, 0.0) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi))
    assert heat_kernel(0.5, 1.0) == pytest.approx(math.exp(-1.0) / math.sqrt(math.pi))
    with pytest.raises(DomainError):
        heat_kernel(0.0, 1.0)


def test_noise_integrals():
    noise = NoiseSpec()
    assert noise.gamma0_integral(1.0) == pytest.approx(1.0 - math.exp(-1.0))
    assert noise.gamma0_double_integral(1.0) == pytest.approx(2.0 * math.exp(-1.0))
    assert noise.dalang_margin_quadrature() == pytest.approx(noise.dalang_margin, rel=1e-8)
    with pytest.raises(DomainError):
        NoiseSpec(d=2)


def test_overlap_ratio():
    assert np.allclose(overlap_ratio([0.0, 1.0, 4.0, -8.0], 2.0), [1.0, 0.75, 0.0, 0.0])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_duffy_simplex_volume(n):
    r, w = duffy_simplex(2.0, n, 4)
    assert w.sum() == pytest.approx(2.0 ** n / math.factorial(n), rel=1e-12)
    assert np.all(np.diff(r, axis=1) > 0)
    assert np.all((r > 0) & (r < 2.0))


def test_chaos_terms_are_symmetric_and_decay():
    model = _small_model()
    forward = model.chaos_terms(1.0, 0.5, [0.0, 1.0])
    backward = model.chaos_terms(0.5, 1.0, [0.0, 1.0])
    assert forward.shape == (2, 2)
    assert np.allclose(forward, backward, rtol=1e-10)
    assert np.all(forward[:, 1] < forward[:, 0])
    assert 0.0 < model.truncation_ratio < 1.0


def test_spatial_covariance_converges():
    model = _small_model()
    c_r, c_inf = model.spatial_covariances(1.0, 1.0, [1.0, 10.0, 1000.0])
    assert np.all(np.diff(c_r) > 0)
    assert np.all(c_r < c_inf)
    assert c_r[-1] == pytest.approx(c_inf, rel=1e-2)
    with pytest.raises(DomainError):
        model.spatial_covariances(1.0, 1.0, [0.0])
    with pytest.raises(DomainError):
        model.spatial_covariances(2.0, 1.0, [1.0])


def test_model_validation():
    with pytest.raises(DomainError) as exc:
        PAMChaosModel(N_trunc=3, time_nodes=(4, 4))
    assert exc.value.error_type == ErrorType.GRID
    with pytest.raises(DomainError):
        PAMChaosModel(T=0.0)
    with pytest.raises(DomainError):
        PAMChaosModel(N_trunc=0)


def test_bound_rate():
    model = _small_model()
    near, far = spde_bound(model, 1.0), spde_bound(model, 4.0)
    assert near.A == pytest.approx(4.0 * far.A, rel=1e-12)
    assert near.d2_bound == pytest.approx(2.0 * far.d2_bound, rel=1e-12)
    assert near.d2_bound == pytest.approx(math.sqrt(3.0) / 2.0 * math.sqrt(near.A))
    assert near.Astar_majorant == pytest.approx(2.0 * (2.0 * (1.0 - math.exp(-1.0))) ** 3)
    assert a_star_majorant(model.noise, 1.0, 0.2, 1.0) == pytest.approx(near.Astar_majorant)
    with pytest.raises(DomainError):
        spde_bound(model, -1.0)


def test_rows():
    model = _small_model()
    rows = spde_rows(model, [1.0, 4.0])
    assert [row.R for row in rows] == [1.0, 4.0]
    assert rows[1].hs_CR_Cinf < rows[0].hs_CR_Cinf
    assert rows[0].trunc_ratio == model.truncation_ratio
    grids = model.covariance_grids([1.0, 4.0], threads=2)
    again = spde_rows(model, [1.0, 4.0], grids=grids)
    assert [row.to_dict() for row in again] == [row.to_dict() for row in rows]


def test_pam_covariance_sums_chaos_terms():
    model = _small_model()
    terms = model.chaos_terms(1.0, 0.5, [0.0, 1.0])
    assert model.pam_covariance(1.0, 0.5) == pytest.approx(terms[:, 0].sum(), rel=1e-14)
    profile = model.pam_covariance(1.0, 0.5, np.array([0.0, 1.0]))
    assert np.allclose(profile, terms.sum(axis=0), rtol=1e-14)
    assert model.resolution_change() >= 0.0
    with pytest.raises(DomainError):
        model.pam_covariance(0.0, 0.5)
