"""Functional Breuer–Major CLT for moving-average Gaussian processes.

``Y_t = ∫ g(t - s) W(ds)`` with a compactly supported kernel ``g`` on
``[0, 1]`` normalised so that ``∫ g² = 1``; ``ρ(t) = ∫ g(s) g(s + |t|) ds``.
The functional of interest is

    F_T(r) = T^{-1/2} ∫_{-rT}^{rT} (f(Y_t) - E f(Y_t)) dt,   r ∈ [0, 1],

a random element of ``K = L²([0, 1])``. K is discretised by Gauss–Legendre
nodes on ``[0, 1]``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from numpy.polynomial import HermiteE, Polynomial
from scipy.signal import fftconvolve

from chaoslab.bounds.d2 import cosine_dictionary, d2_lower_estimate, gaussian_sampler
from chaoslab.bounds.quadrature import SQRT3_HALF, imp_bound_integral
from chaoslab.chaos.hermite import (
    HermiteCoefficients,
    composite_gauss_legendre,
    gauss_legendre,
    gaussian_lp_norm,
    hermite_expand,
)
from chaoslab.chaos.sampling import monte_carlo_blocks, stream_rng
from chaoslab.core.operators import KOperator, hs_distance
from chaoslab.core.tensors import HilbertSpec
from chaoslab.utils.error_handling import DomainError, ErrorType, QuadratureError, require_finite
from chaoslab.utils.parallel import ordered_sum

logger = logging.getLogger(__name__)

SUPPORT = 1.0
PANEL_ORDER = 24

# Subordinating functions in the probabilists' Hermite basis.
F_PRESETS = {
    "linear": (0.0, 1.0),
    "hermite2": (0.0, 0.0, 1.0),
    "hermite3": (0.0, 0.0, 0.0, 1.0),
    "hermite2+3": (0.0, 0.0, 1.0, 1.0),
    "square": (1.0, 0.0, 1.0),
    "constant": (1.0,),
}


class KernelShape(str, Enum):
    INDICATOR = "indicator"
    TRIANGULAR = "triangular"
    GAUSSIAN = "gaussian"


def subordinating_function(spec: str | Sequence[float]) -> Polynomial:
    """A preset name or power-basis coefficients ``(a_0, a_1, ...)``."""
    if isinstance(spec, str):
        try:
            coeffs = F_PRESETS[spec]
        except KeyError as exc:
            raise DomainError(f"unknown subordinating function {spec!r}", "f", spec) from exc
        return HermiteE(coeffs).convert(kind=Polynomial)
    coeffs = np.asarray(spec, dtype=float)
    if coeffs.ndim != 1 or coeffs.size == 0:
        raise DomainError("polynomial coefficients must be a non-empty list", "f", spec,
                          error_type=ErrorType.EMPTY_INPUT)
    return Polynomial(coeffs)


def cell_overlap(edges: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """Length of ``[-radius, radius] ∩ [edges[k], edges[k+1])``; shape ``(len(radius), len(edges) - 1)``."""
    radius = np.atleast_1d(np.asarray(radius, dtype=float))[:, None]
    lo = np.maximum(edges[None, :-1], -radius)
    hi = np.minimum(edges[None, 1:], radius)
    return np.clip(hi - lo, 0.0, None)


@dataclass(frozen=True)
class MovingAverageModel:
    """Kernel shape plus the time step of the simulation grid."""

    shape: KernelShape = KernelShape.INDICATOR
    dt: float = 1.0 / 64.0

    def __post_init__(self):
        object.__setattr__(self, "shape", KernelShape(self.shape))
        if not 0 < self.dt <= SUPPORT / 16:
            raise DomainError(
                "time step must resolve the kernel support (dt <= support/16)",
                "dt", self.dt, error_type=ErrorType.GRID,
            )
        object.__setattr__(self, "_scale", 1.0)
        if self.shape is KernelShape.GAUSSIAN:
            x, w = gauss_legendre(0.0, SUPPORT, 64)
            object.__setattr__(self, "_scale", 1.0 / math.sqrt(float(np.sum(w * self._raw(x) ** 2))))

    def _raw(self, s: np.ndarray) -> np.ndarray:
        if self.shape is KernelShape.INDICATOR:
            return np.ones_like(s)
        if self.shape is KernelShape.TRIANGULAR:
            return math.sqrt(3.0) * (1.0 - np.abs(2.0 * s - 1.0))
        return np.exp(-0.5 * ((s - 0.5) * 6.0) ** 2)

    def g(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        inside = (s >= 0.0) & (s < SUPPORT)
        return np.where(inside, self._scale * self._raw(np.where(inside, s, 0.0)), 0.0)

    def rho(self, t) -> np.ndarray:
        """``ρ(t) = ∫ g(s) g(s + |t|) ds`` by Gauss–Legendre between the kinks of g."""
        t = np.abs(np.asarray(t, dtype=float))
        flat = t.reshape(-1)
        upper = np.clip(SUPPORT - flat, 0.0, None)
        breaks = np.sort(np.clip(np.stack([np.zeros_like(flat), 0.5 - flat, np.full_like(flat, 0.5), upper], axis=1),
                                 0.0, upper[:, None]), axis=1)
        x, w = gauss_legendre(0.0, 1.0, PANEL_ORDER)
        lengths = np.diff(breaks, axis=1)
        s = breaks[:, :-1, None] + lengths[:, :, None] * x
        values = self.g(s) * self.g(s + flat[:, None, None])
        out = np.einsum("npk,np,k->n", values, lengths, w)
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def rho_breaks(self) -> np.ndarray:
        return np.array([-SUPPORT, -0.5, 0.0, 0.5, SUPPORT])

    def rho_l1(self) -> float:
        u, w = composite_gauss_legendre(self.rho_breaks(), PANEL_ORDER)
        return float(np.sum(w * np.abs(self.rho(u))))

    def g_star(self, shifts: np.ndarray | None = None) -> float:
        """``G★ = sup_u ∫ g(t + u) dt`` maximised over a shift grid."""
        if shifts is None:
            shifts = np.linspace(-2.0, 2.0, 33)
        best = 0.0
        for u in np.asarray(shifts, dtype=float):
            t, w = composite_gauss_legendre([-u - 1.0, -u, -u + 0.5, -u + SUPPORT, -u + 2.0], PANEL_ORDER)
            best = max(best, float(np.sum(w * self.g(t + u))))
        return best

    def taps(self, dt: float | None = None) -> np.ndarray:
        """Discrete moving-average weights ``a_l ∝ g((l + ½)Δ)√Δ`` with ``Σ a_l² = 1``."""
        dt = self.dt if dt is None else dt
        n_taps = int(round(SUPPORT / dt))
        a = self.g((np.arange(n_taps) + 0.5) * dt) * math.sqrt(dt)
        return a / np.linalg.norm(a)


def expand_f(f: Polynomial, Q: int = 12, quad_order: int = 64) -> HermiteCoefficients:
    return hermite_expand(f, Q, quad_order)


def _phi(coeffs: HermiteCoefficients, rho: np.ndarray) -> np.ndarray:
    """``Σ_{q>=1} c_q² q! ρ^q``: the covariance of ``f(Y_s)`` and ``f(Y_t)``."""
    terms = coeffs.variance_terms
    rho = np.asarray(rho, dtype=float)
    return sum(terms[q] * rho ** q for q in range(1, coeffs.Q + 1))


def covariance_CT(model: MovingAverageModel, coeffs: HermiteCoefficients, r1: float, r2: float, T: float) -> float:
    """``Cov(F_T(r1), F_T(r2))`` reduced by stationarity to one integral in ``u = t - s``.

    ``(1/T) ∫ φ(u) ℓ(u) du`` where ``ℓ(u)`` is the length of
    ``[-r1 T, r1 T] ∩ [u - r2 T, u + r2 T]``.
    """
    if T <= 0:
        raise DomainError("horizon must be positive", "T", T)
    a, b = r1 * T, r2 * T
    if a <= 0 or b <= 0:
        return 0.0
    kinks = np.array([0.0, a - b, b - a, a + b, -a - b])
    breaks = np.concatenate([model.rho_breaks(), kinks[np.abs(kinks) < SUPPORT]])
    u, w = composite_gauss_legendre(breaks, PANEL_ORDER)
    overlap = np.clip(np.minimum(a, u + b) - np.maximum(-a, u - b), 0.0, None)
    value = float(np.sum(w * _phi(coeffs, model.rho(u)) * overlap)) / T
    require_finite(value, "C_T")
    return value


def sigma_squared(model: MovingAverageModel, coeffs: HermiteCoefficients) -> float:
    u, w = composite_gauss_legendre(model.rho_breaks(), PANEL_ORDER)
    value = 2.0 * float(np.sum(w * _phi(coeffs, model.rho(u))))
    if value < -1e-12:
        raise QuadratureError("negative limit variance", {"sigma2": value})
    return max(value, 0.0)


def sigma_limit(model: MovingAverageModel, coeffs: HermiteCoefficients) -> float:
    """``σ = (2 Σ c_q² q! ∫ρ^q)^{1/2}``."""
    return math.sqrt(sigma_squared(model, coeffs))


def covariance_Cinf(model: MovingAverageModel, coeffs: HermiteCoefficients, r1: float, r2: float) -> float:
    """Brownian limit covariance ``σ² min(r1, r2)``."""
    return sigma_squared(model, coeffs) * min(r1, r2)


def covariance_matrix_CT(model, coeffs, r_nodes: np.ndarray, T: float) -> np.ndarray:
    return np.array([[covariance_CT(model, coeffs, a, b, T) for b in r_nodes] for a in r_nodes])


def covariance_matrix_Cinf(model, coeffs, r_nodes: np.ndarray) -> np.ndarray:
    return sigma_squared(model, coeffs) * np.minimum.outer(r_nodes, r_nodes)


def absolute_covariance_integral(model: MovingAverageModel, coeffs: HermiteCoefficients) -> tuple[float, float]:
    """``M₁ = ∫|Cov(f(Y_0), f(Y_t))| dt`` and its majorant ``‖ρ‖₁ Var f(Y_0)``."""
    u, w = composite_gauss_legendre(model.rho_breaks(), PANEL_ORDER)
    m1 = float(np.sum(w * np.abs(_phi(coeffs, model.rho(u)))))
    return m1, model.rho_l1() * float(coeffs.variance_terms[1:].sum())


def boundary_moment(model: MovingAverageModel, coeffs: HermiteCoefficients) -> float:
    """``∫|u| φ(u) du``; for ``T >= support`` it is exactly ``T (σ² - C_T(1, 1))``."""
    u, w = composite_gauss_legendre(model.rho_breaks(), PANEL_ORDER)
    return float(np.sum(w * np.abs(u) * _phi(coeffs, model.rho(u))))


def bm_theorem_bound(model: MovingAverageModel, f: Polynomial, T: float, quad_order: int = 64) -> float:
    """``(√3/2) ‖f'(Y_0)‖₄ ‖f''(Y_0)‖₄ G★³ / √T``."""
    if T <= 0:
        raise DomainError("horizon must be positive", "T", T)
    first = gaussian_lp_norm(f.deriv(1), 4.0, quad_order)
    second = gaussian_lp_norm(f.deriv(2), 4.0, quad_order)
    return SQRT3_HALF * first * second * model.g_star() ** 3 / math.sqrt(T)


def _time_edges(T: float, dt: float) -> np.ndarray:
    n_cells = int(math.ceil(2.0 * T / dt - 1e-9))
    return -T + dt * np.arange(n_cells + 1)


def simulate_FT(
    model: MovingAverageModel,
    f: Polynomial,
    coeffs: HermiteCoefficients,
    T: float,
    r_nodes: np.ndarray,
    rng: np.random.Generator,
    n: int,
) -> np.ndarray:
    """``n`` samples of ``F_T`` at ``r_nodes`` (node values, shape ``(n, R)``).

    ``Y`` is a discrete moving average of i.i.d. normals with unit variance,
    so ``E f(Y_t) = c_0`` exactly. Time integrals are Riemann sums with cell
    weights clipped to ``[-rT, rT]``.
    """
    edges = _time_edges(T, model.dt)
    weights = cell_overlap(edges, np.asarray(r_nodes) * T)
    a = model.taps()
    innovations = rng.standard_normal((n, weights.shape[1] + a.size - 1))
    Y = fftconvolve(innovations, a[None, :], mode="valid", axes=1)
    centered = f(Y) - coeffs.c[0]
    return centered @ weights.T / math.sqrt(T)


def discrete_covariance(
    model: MovingAverageModel,
    coeffs: HermiteCoefficients,
    T: float,
    r_nodes: np.ndarray,
    dt: float | None = None,
) -> np.ndarray:
    """Exact covariance of the Riemann-sum estimator used by :func:`simulate_FT`."""
    dt = model.dt if dt is None else dt
    edges = _time_edges(T, dt)
    weights = cell_overlap(edges, np.asarray(r_nodes) * T)
    a = model.taps(dt)
    rho_d = np.correlate(a, a, mode="full")
    phi = _phi(coeffs, np.clip(rho_d, -1.0, 1.0))
    smoothed = fftconvolve(weights, phi[None, :], mode="same", axes=1)
    cov = smoothed @ weights.T / T
    return 0.5 * (cov + cov.T)


def majorant_integral(model: MovingAverageModel, T: float, r_nodes, r_weights, h: float = 1.0 / 16.0) -> float:
    """Five-fold integral of the kernel majorants of ``DF_T`` and ``D²F_T``.

    ``T1(x, r) = ∫_{-rT}^{rT} g(t - x) dt`` and ``T2(x, y, r) = ∫ g(t-x) g(t-y) dt``
    over the same window, on midpoint grids. The result is bounded by ``G★⁶ T``.
    """
    t_edges = _time_edges(T, h)
    t_mid = 0.5 * (t_edges[1:] + t_edges[:-1])
    window = cell_overlap(t_edges, np.asarray(r_nodes) * T)
    x = np.arange(-T - SUPPORT + 0.5 * h, T, h)
    G = model.g(t_mid[:, None] - x[None, :])
    t1 = (window @ G).T
    t2 = np.stack([(G.T * row) @ G for row in window], axis=-1)
    return imp_bound_integral(t1, t2, np.full(x.size, h), np.asarray(r_weights))


@dataclass
class BMRow:
    T: float
    bound: float
    d2_lower: float
    d2_stderr: float
    hs_CT_Cinf: float
    sigma2: float
    disc_bias: float = 0.0
    var_z: float = 0.0
    hs_mc: float = 0.0
    hs_mc_scale: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BMExperiment:
    """One Breuer–Major sweep over horizons."""

    f: Polynomial
    T_grid: Sequence[float]
    model: MovingAverageModel = field(default_factory=MovingAverageModel)
    n_nodes: int = 16
    n_mc: int = 10_000
    seed: int = 0
    Q: int = 12
    dictionary_size: int = 128
    quad_order: int = 64

    def __post_init__(self):
        if self.n_mc < 2:
            raise DomainError("at least two Monte Carlo replicates are needed", "n_mc", self.n_mc)
        self.coeffs = expand_f(self.f, self.Q, self.quad_order)
        self.r_nodes, self.r_weights = gauss_legendre(0.0, 1.0, self.n_nodes)
        self.spec = HilbertSpec(1, self.n_nodes, self.r_weights)

    def operator(self, kernel: np.ndarray) -> KOperator:
        return KOperator.from_kernel(self.spec, kernel)

    def sampler(self, T: float):
        """``F_T`` sampler in orthonormal K coordinates."""

        def sample(n: int, rng: np.random.Generator) -> np.ndarray:
            values = simulate_FT(self.model, self.f, self.coeffs, T, self.r_nodes, rng, n)
            return self.spec.to_coordinates(values)

        return sample

    def evaluate(self, T: float, block_size: int | None = None, threads: int | str | None = 1) -> BMRow:
        logger.info("Breuer-Major: T=%g, %d replicates", T, self.n_mc)
        model, coeffs, nodes = self.model, self.coeffs, self.r_nodes
        c_T = self.operator(covariance_matrix_CT(model, coeffs, nodes, T))
        c_inf = self.operator(covariance_matrix_Cinf(model, coeffs, nodes))
        c_disc = self.operator(discrete_covariance(model, coeffs, T, nodes))
        c_half = self.operator(discrete_covariance(model, coeffs, T, nodes, model.dt / 2))
        sampler = self.sampler(T)
        tag = f"breuer_major.T={T:g}"

        # Z is N(0, c_disc), the exact covariance of the Riemann-sum F_T rather than
        # C_T; disc_bias tracks how far c_disc moves when dt is halved.
        dictionary = cosine_dictionary(self.n_nodes, stream_rng(self.seed, f"{tag}.dictionary"), self.dictionary_size)
        lower = d2_lower_estimate(sampler, gaussian_sampler(c_disc), dictionary, self.n_mc,
                                  seed=self.seed, tag=tag, block_size=block_size, threads=threads)

        last = int(np.argmax(nodes))

        def moments(rng, index, n):
            x = sampler(n, rng)
            outer = np.einsum("ni,nj->nij", x, x)
            spread = np.sum((outer - c_disc.entries) ** 2, axis=(1, 2))
            tail = x[:, last] ** 2
            return x.sum(axis=0), outer.sum(axis=0), np.array([spread.sum(), (tail ** 2).sum()])

        parts = monte_carlo_blocks(moments, self.n_mc, self.seed, f"{tag}.moments", block_size, threads)
        mean = ordered_sum([p[0] for p in parts]) / self.n_mc
        second = ordered_sum([p[1] for p in parts]) / self.n_mc
        extra = ordered_sum([p[2] for p in parts]) / self.n_mc
        emp_cov = second - np.outer(mean, mean)

        exact_var = c_disc.entries[last, last]
        var_stderr = math.sqrt(max(extra[1] - second[last, last] ** 2, 0.0) / self.n_mc)
        var_z = (emp_cov[last, last] - exact_var) / var_stderr if var_stderr > 0 else 0.0

        return BMRow(
            T=float(T),
            bound=bm_theorem_bound(model, self.f, T, self.quad_order),
            d2_lower=lower.value,
            d2_stderr=lower.stderr,
            hs_CT_Cinf=hs_distance(c_T, c_inf),
            sigma2=sigma_squared(model, coeffs),
            disc_bias=hs_distance(c_disc, c_half),
            var_z=float(var_z),
            hs_mc=hs_distance(emp_cov, c_disc),
            hs_mc_scale=math.sqrt(extra[0] / self.n_mc),
        )

    def run(self, block_size: int | None = None, threads: int | str | None = 1) -> list[BMRow]:
        return [self.evaluate(T, block_size, threads) for T in self.T_grid]


def fitted_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])
