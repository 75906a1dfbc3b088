"""Spatial averages of the parabolic Anderson model in dimension one.

The mild solution ``u(t, x) = 1 + ∫∫ p_{t-s}(x-y) u(s, y) W(ds, dy)`` is
handled through its chaos expansion. With ``γ₀(t) = e^{-|t|}`` and ``γ₁``
the standard Gaussian density, every spatial integral of a chaos term is a
Gaussian integral: for ordered times ``r`` (the ``u(t, z)`` side), ``r'``
(the ``u(s, 0)`` side) and a pairing ``σ``,

    ∫ Π p(...) Π γ₁(y_j - y'_σ(j)) dy dy' = (2π)^{-n/2} det(Q)^{-1/2} exp(-z² 1ᵀQ⁻¹1 / 2),
    Q_ij = δ_ij + (t - r_max(i,j)) + (s - r'_max(σ(i),σ(j))).

The time integrals run over ordered simplices mapped to cubes (Duffy) and
integrated with tensor Gauss–Legendre rules.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.special import erf, erfc

from chaoslab.bounds.quadrature import improved_bound
from chaoslab.chaos.hermite import gauss_hermite, gauss_legendre
from chaoslab.core.operators import KOperator, hs_distance
from chaoslab.core.tensors import HilbertSpec
from chaoslab.utils.error_handling import DomainError, ErrorType, QuadratureError, require_finite
from chaoslab.utils.parallel import run_blocks

logger = logging.getLogger(__name__)

UNIT_BALL_VOLUME = 2.0  # ω₁
DEFAULT_TIME_NODES = (16, 10, 6, 4)
CHUNK_PAIRS = 200_000


def heat_kernel(t, x) -> np.ndarray:
    """``p_t(x) = (2πt)^{-1/2} e^{-x²/(2t)}``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("heat kernel needs t > 0", "t", float(np.min(t)))
    x = np.asarray(x, dtype=float)
    value = np.exp(-0.5 * x ** 2 / t) / np.sqrt(2.0 * math.pi * t)
    return value if value.ndim else float(value)


@dataclass(frozen=True)
class NoiseSpec:
    """Exponential temporal covariance and Gaussian spatial covariance, ``d = 1``."""

    d: int = 1
    check_set: tuple = (0.5, 1.0, 2.0)
    gamma1_l1: float = 1.0

    def __post_init__(self):
        if self.d != 1:
            raise DomainError("only spatial dimension one is supported", "d", self.d)
        grid = np.linspace(-10.0, 10.0, 401)
        if np.any(self.gamma0(grid) < 0) or np.any(self.gamma1(grid) < 0):
            raise DomainError("noise covariances must be nonnegative", "gamma", "negative value")
        for a in self.check_set:
            if self.gamma0_double_integral(a) <= 0:
                raise DomainError("temporal covariance is trivial", "a", a)

    @staticmethod
    def gamma0(t) -> np.ndarray:
        return np.exp(-np.abs(np.asarray(t, dtype=float)))

    @staticmethod
    def gamma0_integral(a: float) -> float:
        """``∫₀^a γ₀``."""
        return -math.expm1(-a)

    @staticmethod
    def gamma0_double_integral(a: float) -> float:
        """``∫₀^a ∫₀^a γ₀(r - r') dr dr' = 2(a - 1 + e^{-a})``."""
        return 2.0 * (a + math.expm1(-a))

    @staticmethod
    def gamma1(x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * x ** 2) / math.sqrt(2.0 * math.pi)

    @property
    def dalang_margin(self) -> float:
        """``∫ μ(dξ) / (1 + ξ²)`` for the Gaussian spectral measure, ``½ e^{1/2} erfc(1/√2)``."""
        return 0.5 * math.exp(0.5) * float(erfc(1.0 / math.sqrt(2.0)))

    def dalang_margin_quadrature(self, order: int = 128) -> float:
        xi, w = gauss_hermite(order)
        # μ(dξ) = (2π)^{-1} e^{-ξ²/2} dξ = (2π)^{-1/2} N(dξ)
        return float(np.sum(w / (1.0 + xi ** 2))) / math.sqrt(2.0 * math.pi)


def overlap_ratio(z, R: float) -> np.ndarray:
    """``|[-R, R] ∩ [z - R, z + R]| / (2R) = max(0, 1 - |z| / (2R))``."""
    return np.clip(1.0 - np.abs(np.asarray(z, dtype=float)) / (2.0 * R), 0.0, None)


def duffy_simplex(t: float, n: int, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Points ``0 < r_1 < ... < r_n < t`` and weights of a tensor rule on the simplex.

    ``r_n = t v_n`` and ``r_k = r_{k+1} v_k`` with Jacobian ``Π r_{k+1}``.
    """
    v, w = gauss_legendre(0.0, 1.0, nodes)
    grid = np.array(list(itertools.product(range(nodes), repeat=n)), dtype=np.intp).reshape(-1, n)
    vv = v[grid]
    weights = np.prod(w[grid], axis=1)
    r = np.empty_like(vv)
    upper = np.full(vv.shape[0], float(t))
    for k in range(n - 1, -1, -1):
        r[:, k] = upper * vv[:, k]
        weights = weights * upper
        upper = r[:, k]
    return r, weights


def _term_reduce(n: int, t: float, s: float, nodes: int, factor: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """``Σ_σ ∫∫ Π γ₀ · (2π)^{-n/2} det(Q)^{-1/2} · factor(1ᵀQ⁻¹1)`` over both simplices.

    ``factor`` maps the array of ``q = 1ᵀQ⁻¹1`` values to ``(..., k)``; the
    result has shape ``(k,)``. Pairs are processed in chunks.
    """
    r, wr = duffy_simplex(t, n, nodes)
    rp, wrp = duffy_simplex(s, n, nodes)
    ones = np.ones(n)
    idx = np.arange(n)
    left_max = np.maximum.outer(idx, idx)
    chunk = max(1, CHUNK_PAIRS // rp.shape[0])
    total = None
    for perm in itertools.permutations(range(n)):
        perm = np.array(perm)
        rp_perm = rp[:, perm]
        # s - r'_max(σ(i),σ(j))
        right_max = np.maximum.outer(perm, perm)
        tail_p = s - rp[:, right_max]
        for start in range(0, r.shape[0], chunk):
            rc = r[start:start + chunk]
            tail = t - rc[:, left_max]
            Q = np.eye(n) + tail[:, None] + tail_p[None, :]
            _, logdet = np.linalg.slogdet(Q)
            q = np.linalg.solve(Q, np.broadcast_to(ones, Q.shape[:-1])[..., None])[..., 0].sum(axis=-1)
            g0 = np.prod(NoiseSpec.gamma0(rc[:, None, :] - rp_perm[None, :, :]), axis=-1)
            weight = (wr[start:start + chunk, None] * wrp[None, :] * g0
                      * np.exp(-0.5 * logdet) * (2.0 * math.pi) ** (-0.5 * n))
            part = np.einsum("ab,abk->k", weight, factor(q))
            total = part if total is None else total + part
    return total


@dataclass
class SpdeRow:
    R: float
    A: float
    d2_bound: float
    hs_CR_Cinf: float
    trunc_ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SpdeBound:
    A: float
    d2_bound: float
    Astar_majorant: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PAMChaosModel:
    """Chaos-truncated PAM with a tensor quadrature in time and the derivative majorant ``a e^{bt}``."""

    T: float = 1.0
    N_trunc: int = 3
    time_nodes: Sequence[int] = DEFAULT_TIME_NODES
    const_a: float = 1.0
    const_b: float = 1.0
    k_nodes: int = 8
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        if self.T <= 0:
            raise DomainError("horizon must be positive", "T", self.T)
        if self.N_trunc < 1:
            raise DomainError("chaos truncation must be at least 1", "N_trunc", self.N_trunc)
        if len(self.time_nodes) < self.N_trunc:
            raise DomainError("time quadrature sizes must cover every chaos order", "time_nodes",
                              list(self.time_nodes), error_type=ErrorType.GRID)
        if self.const_a < 0:
            raise DomainError("majorant constant a must be nonnegative", "const_a", self.const_a)
        self.k_grid, self.k_weights = gauss_legendre(0.0, self.T, self.k_nodes)
        self.spec = HilbertSpec(1, self.k_nodes, self.k_weights)

    def refined(self) -> "PAMChaosModel":
        return PAMChaosModel(self.T, self.N_trunc, tuple(2 * n for n in self.time_nodes),
                             self.const_a, self.const_b, self.k_nodes, self.noise)

    def _check_times(self, t: float, s: float) -> None:
        if not (0 < t <= self.T * (1 + 1e-12) and 0 < s <= self.T * (1 + 1e-12)):
            raise DomainError("times must lie in (0, T]", "t,s", (t, s))

    def chaos_terms(self, t: float, s: float, z) -> np.ndarray:
        """Order-by-order contributions to ``Cov(u(t, z), u(s, 0))``; shape ``(N_trunc, len(z))``."""
        self._check_times(t, s)
        z2 = np.atleast_1d(np.asarray(z, dtype=float)) ** 2
        terms = np.array([
            _term_reduce(n, t, s, self.time_nodes[n - 1], lambda q: np.exp(-0.5 * q[..., None] * z2))
            for n in range(1, self.N_trunc + 1)
        ])
        require_finite(terms, "PAM chaos terms")
        if np.any(terms < -1e-14):
            raise QuadratureError("negative chaos contribution", {"t": t, "s": s})
        return terms

    @cached_property
    def truncation_ratio(self) -> float:
        """Order-N over order-(N-1) contribution at ``t = s = T``, ``z = 0``."""
        if self.N_trunc < 2:
            return 0.0
        terms = self.chaos_terms(self.T, self.T, 0.0)[:, 0]
        ratio = float(terms[-1] / terms[-2]) if terms[-2] > 0 else math.inf
        if ratio >= 1:
            raise DomainError("chaos truncation does not converge", "trunc_ratio", ratio)
        return ratio

    def pam_covariance(self, t: float, s: float, z=0.0):
        """``Cov(u(t, z), u(s, 0))`` summed over the first ``N_trunc`` chaoses."""
        _ = self.truncation_ratio
        value = self.chaos_terms(t, s, z).sum(axis=0)
        return float(value[0]) if np.ndim(z) == 0 else value

    def spatial_covariances(self, t: float, s: float, R) -> tuple[np.ndarray, float]:
        """``C_R(t, s)`` for every radius in ``R`` and the limit ``C_∞(t, s)``.

        With ``c(z) = Σ W e^{-q z²/2}`` both integrals over ``z`` are closed form:
        ``∫ c(z) dz = Σ W √(2π/q)`` and the overlap-weighted integral uses ``erf``.
        """
        self._check_times(t, s)
        radii = np.atleast_1d(np.asarray(R, dtype=float))
        if np.any(radii <= 0):
            raise DomainError("radius must be positive", "R", float(radii.min()))

        def factor(q):
            q = q[..., None]
            full = np.sqrt(2.0 * math.pi / q)
            windowed = 2.0 * (np.sqrt(math.pi / (2.0 * q)) * erf(2.0 * radii * np.sqrt(q / 2.0))
                              + np.expm1(-2.0 * q * radii ** 2) / (2.0 * radii * q))
            return np.concatenate([full, windowed], axis=-1)

        total = sum(_term_reduce(n, t, s, self.time_nodes[n - 1], factor) for n in range(1, self.N_trunc + 1))
        require_finite(total, "spatial covariance")
        return UNIT_BALL_VOLUME * total[1:], float(UNIT_BALL_VOLUME * total[0])

    def covariance_grids(self, radii: Sequence[float], threads: int | str | None = 1) -> tuple[np.ndarray, np.ndarray]:
        """``C_R`` (one ``k × k`` matrix per radius) and ``C_∞`` on the K grid."""
        pairs = [(i, j) for i in range(self.k_nodes) for j in range(i, self.k_nodes)]

        def cell(index, start, stop):
            i, j = pairs[index]
            return self.spatial_covariances(self.k_grid[i], self.k_grid[j], radii)

        results = run_blocks(cell, len(pairs), block_size=1, threads=threads)
        c_r = np.zeros((len(radii), self.k_nodes, self.k_nodes))
        c_inf = np.zeros((self.k_nodes, self.k_nodes))
        for (i, j), (by_radius, limit) in zip(pairs, results):
            c_r[:, i, j] = c_r[:, j, i] = by_radius
            c_inf[i, j] = c_inf[j, i] = limit
        return c_r, c_inf

    def operator(self, kernel: np.ndarray) -> KOperator:
        return KOperator.from_kernel(self.spec, kernel)

    def derivative_majorant(self, t) -> np.ndarray:
        """``C(t) = a e^{bt}``."""
        return self.const_a * np.exp(self.const_b * np.asarray(t, dtype=float))

    def resolution_change(self) -> float:
        """Relative change of ``Cov(u(T, 0), u(T, 0))`` when every time rule is doubled."""
        base = self.pam_covariance(self.T, self.T, 0.0)
        fine = self.refined().chaos_terms(self.T, self.T, 0.0).sum()
        return abs(fine - base) / abs(fine) if fine else 0.0


def a_star_majorant(noise: NoiseSpec, R: float, r1, r2) -> np.ndarray:
    """``ω R ‖γ₁‖₁³ (2 ∫₀^{max(r1, r2)} γ₀)³``."""
    upper = np.maximum(r1, r2)
    return UNIT_BALL_VOLUME * R * noise.gamma1_l1 ** 3 * (-2.0 * np.expm1(-upper)) ** 3


def spde_bound(model: PAMChaosModel, R: float, t_nodes: int = 16) -> SpdeBound:
    """``𝒜 <= 16 R^{-2} ∫∫ C(r1)² C(r2)² 𝒜★`` on ``[0, T]²`` and ``d2_bound = (√3/2)√𝒜``."""
    if R <= 0:
        raise DomainError("radius must be positive", "R", R)
    l1 = model.noise.gamma1_l1
    if not (0 < l1 < math.inf):
        raise DomainError("spatial covariance must have finite positive mass", "gamma1_l1", l1)
    r, w = gauss_legendre(0.0, model.T, t_nodes)
    c2 = model.derivative_majorant(r) ** 2
    star = a_star_majorant(model.noise, R, r[:, None], r[None, :])
    A = 16.0 / R ** 2 * float(np.einsum("i,j,i,j,ij->", w, w, c2, c2, star))
    return SpdeBound(A=A, d2_bound=improved_bound(A),
                     Astar_majorant=float(a_star_majorant(model.noise, R, model.T, model.T)))


def spde_rows(model: PAMChaosModel, radii: Sequence[float], threads: int | str | None = 1,
              bound_nodes: int = 16, grids: tuple[np.ndarray, np.ndarray] | None = None) -> list[SpdeRow]:
    """One row per radius; ``grids`` reuses a ``covariance_grids`` result."""
    logger.info("PAM: T=%g, N=%d, radii %s", model.T, model.N_trunc, list(radii))
    c_r, c_inf = model.covariance_grids(radii, threads) if grids is None else grids
    limit = model.operator(c_inf)
    rows = []
    for k, R in enumerate(radii):
        bound = spde_bound(model, R, bound_nodes)
        rows.append(SpdeRow(
            R=float(R),
            A=bound.A,
            d2_bound=bound.d2_bound,
            hs_CR_Cinf=hs_distance(model.operator(c_r[k]), limit),
            trunc_ratio=model.truncation_ratio,
        ))
    return rows
