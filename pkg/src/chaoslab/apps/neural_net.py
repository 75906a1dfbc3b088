"""Shallow Gaussian networks as random elements of ``K = L²(ℝ, ν)``.

A width-``n`` network with one hidden layer and standard normal weights,

    f_n(x) = n^{-1/2} Σ_j w_j τ(x w_j⁽⁰⁾),

is a smooth functional of ``2n`` independent normals. Its Malliavin
derivatives are explicit, so the derivative-norm tables of the white-noise
bound reduce to one-dimensional Gaussian moments of ``τ``, ``τ'`` and ``τ''``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

from chaoslab.bounds.d2 import cosine_dictionary, d2_lower_estimate, gaussian_sampler
from chaoslab.bounds.quadrature import imp_bound_integral, improved_bound
from chaoslab.chaos.hermite import gauss_hermite, gauss_legendre
from chaoslab.chaos.sampling import monte_carlo_blocks, stream_rng
from chaoslab.core.operators import KOperator, hs_distance
from chaoslab.core.tensors import HilbertSpec
from chaoslab.utils.error_handling import DomainError, ErrorType, QuadratureError
from chaoslab.utils.parallel import ordered_sum

logger = logging.getLogger(__name__)

ENVELOPE_GRID = np.linspace(-50.0, 50.0, 1000)
QUARTIC_ROOT_3 = 3.0 ** 0.25


@dataclass(frozen=True, eq=False)
class ActivationSpec:
    """Activation with its first two derivatives and envelope ``|τ^{(ℓ)}(x)| <= a + b|x|^γ``."""

    name: str
    tau: Callable[[np.ndarray], np.ndarray]
    tau_d1: Callable[[np.ndarray], np.ndarray]
    tau_d2: Callable[[np.ndarray], np.ndarray]
    a: float
    b: float
    gamma: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0 or self.gamma < 0:
            raise DomainError("envelope constants must be nonnegative", "a,b,gamma", (self.a, self.b, self.gamma))
        envelope = self.envelope(ENVELOPE_GRID)
        for order, fn in enumerate((self.tau, self.tau_d1, self.tau_d2)):
            values = np.abs(np.asarray(fn(ENVELOPE_GRID), dtype=float) * np.ones_like(ENVELOPE_GRID))
            if np.any(values > envelope * (1 + 1e-12) + 1e-12):
                worst = float(ENVELOPE_GRID[np.argmax(values - envelope)])
                raise DomainError(
                    f"envelope of {self.name} fails for derivative {order}",
                    "x", worst, error_type=ErrorType.OUT_OF_RANGE,
                )

    def envelope(self, x: np.ndarray) -> np.ndarray:
        return self.a + self.b * np.abs(x) ** self.gamma

    @property
    def is_affine(self) -> bool:
        """True when ``τ''`` vanishes on the check grid."""
        return bool(np.all(np.asarray(self.tau_d2(ENVELOPE_GRID)) * np.ones_like(ENVELOPE_GRID) == 0.0))


def _const(value: float):
    return lambda x: np.full_like(np.asarray(x, dtype=float), value)


ACTIVATIONS = {
    "tanh": lambda: ActivationSpec(
        "tanh", np.tanh,
        lambda x: 1.0 / np.cosh(x) ** 2,
        lambda x: -2.0 * np.tanh(x) / np.cosh(x) ** 2,
        1.0, 0.0, 0.0,
    ),
    "identity": lambda: ActivationSpec("identity", lambda x: np.asarray(x, dtype=float), _const(1.0), _const(0.0),
                                       1.0, 1.0, 1.0),
    "square": lambda: ActivationSpec("square", lambda x: np.asarray(x, dtype=float) ** 2, lambda x: 2.0 * x,
                                     _const(2.0), 2.0, 1.0, 2.0),
    "hermite2": lambda: ActivationSpec("hermite2", lambda x: np.asarray(x, dtype=float) ** 2 - 1.0,
                                       lambda x: 2.0 * x, _const(2.0), 2.0, 1.0, 2.0),
    "cos": lambda: ActivationSpec("cos", np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), 1.0, 0.0, 0.0),
    "constant": lambda: ActivationSpec("constant", _const(1.0), _const(0.0), _const(0.0), 1.0, 0.0, 0.0),
}


def activation(name: str) -> ActivationSpec:
    try:
        return ACTIVATIONS[name]()
    except KeyError as exc:
        raise DomainError(f"unknown activation {name!r}", "activation", name) from exc


@dataclass(frozen=True, eq=False)
class InputMeasure:
    """Quadrature rule for ν: ``nodes`` and nonnegative ``weights``."""

    nodes: np.ndarray
    weights: np.ndarray
    family: str = "custom"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise DomainError("nodes and weights must be equal-length vectors", "nodes", nodes.shape,
                              error_type=ErrorType.EMPTY_INPUT)
        if np.any(weights <= 0):
            raise DomainError("ν weights must be positive", "weights", float(weights.min()))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, n_nodes: int = 16, low: float = -1.0, high: float = 1.0) -> "InputMeasure":
        """Uniform probability on ``[low, high]``."""
        x, w = gauss_legendre(low, high, n_nodes)
        return cls(x, w / (high - low), "uniform")

    @classmethod
    def gaussian(cls, n_nodes: int = 16) -> "InputMeasure":
        x, w = gauss_hermite(n_nodes)
        return cls(x, w, "gaussian")

    def moment(self, power: float) -> float:
        return float(np.sum(self.weights * np.abs(self.nodes) ** power))

    def spec(self) -> HilbertSpec:
        return HilbertSpec(1, self.nodes.size, self.weights)


def sample_network(n: int, act: ActivationSpec, meas: InputMeasure, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """``size`` networks of width ``n`` evaluated on the ν nodes; shape ``(size, p)``."""
    if n < 1:
        raise DomainError("network width must be at least 1", "n", n)
    w = rng.standard_normal((size, n))
    w0 = rng.standard_normal((size, n))
    hidden = act.tau(w0[:, :, None] * meas.nodes[None, None, :])
    return np.einsum("sj,sjp->sp", w, hidden) / math.sqrt(n)


def _gh_covariance(act: ActivationSpec, x, y, order: int) -> np.ndarray:
    z, w = gauss_hermite(order)
    x = np.asarray(x, dtype=float)[..., None]
    y = np.asarray(y, dtype=float)[..., None]
    return np.sum(w * act.tau(x * z) * act.tau(y * z), axis=-1)


def nn_covariance(act: ActivationSpec, x, y, quad_order: int = 64, strict: bool = False):
    """``𝒞(x, y) = E[τ(xZ) τ(yZ)]`` by Gauss–Hermite quadrature.

    The value is recomputed at twice the order; a change above ``1e-8`` is
    logged, or raised as :class:`QuadratureError` when ``strict``.
    """
    value = _gh_covariance(act, x, y, quad_order)
    refined = _gh_covariance(act, x, y, 2 * quad_order)
    change = float(np.max(np.abs(refined - value)))
    if change > 1e-8:
        if strict:
            raise QuadratureError("covariance quadrature did not converge",
                                  {"activation": act.name, "order": quad_order, "change": change})
        logger.warning("covariance quadrature for %s moved by %.2e when doubling the order", act.name, change)
    return float(value) if np.ndim(value) == 0 else value


def nn_covariance_matrix(act: ActivationSpec, meas: InputMeasure, quad_order: int = 64) -> np.ndarray:
    x = meas.nodes
    cov = nn_covariance(act, x[:, None], x[None, :], quad_order)
    return 0.5 * (cov + cov.T)


def gaussian_l4(fn: Callable, r: np.ndarray, quad_order: int = 64) -> np.ndarray:
    """``‖fn(rG)‖₄`` for every ``r``."""
    z, w = gauss_hermite(quad_order)
    r = np.asarray(r, dtype=float)
    values = np.asarray(fn(r[:, None] * z[None, :]), dtype=float) * np.ones((r.size, z.size))
    return np.sum(w * values ** 4, axis=1) ** 0.25


@dataclass(frozen=True)
class NNTables:
    """Derivative-norm tables of one weight block ``(w_j, w_j⁽⁰⁾)``.

    ``d1[x, k] = ‖D_x f_n(r_k)‖₄`` and ``d2[x, y, k] = ‖D²_{x,y} f_n(r_k)‖₄``
    for ``x, y ∈ {w, w⁽⁰⁾}``; every entry carries ``n^{-1/2}``.
    """

    n: int
    d1: np.ndarray
    d2: np.ndarray

    def full(self) -> tuple[np.ndarray, np.ndarray]:
        """Tables over all ``2n`` coordinates, ``w_j`` at ``2j`` and ``w_j⁽⁰⁾`` at ``2j + 1``.

        Derivatives in different blocks vanish, so ``d2`` is block diagonal.
        """
        n_e = self.d1.shape[1]
        d1 = np.tile(self.d1, (self.n, 1))
        d2 = np.zeros((2 * self.n, 2 * self.n, n_e))
        for j in range(self.n):
            d2[2 * j:2 * j + 2, 2 * j:2 * j + 2] = self.d2
        return d1, d2


def nn_derivative_norm_tables(act: ActivationSpec, n: int, r: np.ndarray, quad_order: int = 64) -> NNTables:
    """Closed-form L⁴ norms of ``Df_n(r)`` and ``D²f_n(r)`` per weight block.

    ``D_{w_j} f = n^{-1/2} τ(r w_j⁽⁰⁾)``, ``D_{w_j⁽⁰⁾} f = n^{-1/2} w_j r τ'(r w_j⁽⁰⁾)``;
    the second derivatives are ``n^{-1/2} r τ'`` on the mixed pair,
    ``n^{-1/2} w_j r² τ''`` on ``(w⁽⁰⁾, w⁽⁰⁾)`` and zero on ``(w, w)``.
    """
    if n < 1:
        raise DomainError("network width must be at least 1", "n", n)
    r = np.asarray(r, dtype=float)
    scale = 1.0 / math.sqrt(n)
    l4_tau = gaussian_l4(act.tau, r, quad_order)
    l4_d1 = gaussian_l4(act.tau_d1, r, quad_order)
    l4_d2 = gaussian_l4(act.tau_d2, r, quad_order)
    d1 = scale * np.stack([l4_tau, QUARTIC_ROOT_3 * np.abs(r) * l4_d1])
    mixed = np.abs(r) * l4_d1
    d2 = scale * np.array([
        [np.zeros_like(r), mixed],
        [mixed, QUARTIC_ROOT_3 * r ** 2 * l4_d2],
    ])
    return NNTables(n, d1, d2)


def nn_theorem_bound(act: ActivationSpec, meas: InputMeasure, n: int, quad_order: int = 64) -> float:
    """``(√3/2)·√(integral)`` with the z-integrals collapsed to ``n`` identical block sums."""
    tables = nn_derivative_norm_tables(act, n, meas.nodes, quad_order)
    integral = n * imp_bound_integral(tables.d1, tables.d2, np.ones(2), meas.weights)
    return improved_bound(integral)


def gaussian_abs_moment(power: float) -> float:
    """``E|G|^power = 2^{power/2} Γ((power + 1)/2) / √π``."""
    return float(2.0 ** (power / 2.0) * gamma_fn((power + 1.0) / 2.0) / math.sqrt(math.pi))


def nn_majorant_constant(act: ActivationSpec, meas: InputMeasure) -> float:
    """Constant ``C(ν, a, b, γ)`` of the majorant ``C n^{-1/2}``.

    Uses ``‖τ^{(ℓ)}(rG)‖₄ <= a + b|r|^γ (E|G|^{4γ})^{1/4}`` entrywise and
    ``Σ_x T2 T1 <= 2 max T2 max T1`` inside each block.
    """
    r = np.abs(meas.nodes)
    env4 = act.a + act.b * r ** act.gamma * gaussian_abs_moment(4.0 * act.gamma) ** 0.25
    t1 = env4 * np.maximum(1.0, QUARTIC_ROOT_3 * r)
    t2 = env4 * np.maximum(r, QUARTIC_ROOT_3 * r ** 2)
    integral = 8.0 * float(np.sum(meas.weights * t2 ** 2)) * float(np.sum(meas.weights * t1 ** 2))
    return improved_bound(integral)


@dataclass
class NNRow:
    n: int
    bound: float
    d2_lower: float
    d2_stderr: float
    cov_width_gap: float
    cov_gap_scale: float = 0.0
    majorant: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class NNExperiment:
    """Network bounds and simulations over a list of widths."""

    act: ActivationSpec
    meas: InputMeasure
    widths: Sequence[int]
    n_mc: int = 10_000
    seed: int = 0
    dictionary_size: int = 128
    quad_order: int = 64
    mc_covariances: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.n_mc < 2:
            raise DomainError("at least two Monte Carlo replicates are needed", "n_mc", self.n_mc)
        self.spec = self.meas.spec()
        self.covariance = KOperator.from_kernel(self.spec, nn_covariance_matrix(self.act, self.meas, self.quad_order))

    def sampler(self, n: int):
        def sample(size: int, rng: np.random.Generator) -> np.ndarray:
            return self.spec.to_coordinates(sample_network(n, self.act, self.meas, rng, size))

        return sample

    def evaluate(self, n: int, block_size: int | None = None, threads: int | str | None = 1) -> NNRow:
        logger.info("neural net: width %d, %d replicates", n, self.n_mc)
        tag = f"neural_net.n={n}"
        sampler = self.sampler(n)
        dictionary = cosine_dictionary(self.spec.p, stream_rng(self.seed, f"{tag}.dictionary"), self.dictionary_size)
        lower = d2_lower_estimate(sampler, gaussian_sampler(self.covariance), dictionary, self.n_mc,
                                  seed=self.seed, tag=tag, block_size=block_size, threads=threads)

        gap, scale = self.covariance_estimate(n, block_size, threads)

        return NNRow(
            n=int(n),
            bound=nn_theorem_bound(self.act, self.meas, n, self.quad_order),
            d2_lower=lower.value,
            d2_stderr=lower.stderr,
            cov_width_gap=gap,
            cov_gap_scale=scale,
            majorant=nn_majorant_constant(self.act, self.meas) / math.sqrt(n),
        )

    def covariance_estimate(self, n: int, block_size: int | None = None, threads: int | str | None = 1) -> tuple[float, float]:
        """HS distance of the Monte Carlo covariance at width ``n`` from ``𝒞`` and its noise scale."""
        sampler = self.sampler(n)
        target = self.covariance.entries

        def moments(rng, index, size):
            x = sampler(size, rng)
            outer = np.einsum("ni,nj->nij", x, x)
            spread = np.sum((outer - target) ** 2, axis=(1, 2))
            return outer.sum(axis=0), spread.sum()

        parts = monte_carlo_blocks(moments, self.n_mc, self.seed, f"neural_net.n={n}.moments", block_size, threads)
        # E f_n = 0 exactly, so the second moment is the covariance estimator.
        emp_cov = ordered_sum([p[0] for p in parts]) / self.n_mc
        scale = math.sqrt(ordered_sum([p[1] for p in parts]) / self.n_mc ** 2)
        self.mc_covariances[n] = (emp_cov, scale)
        return hs_distance(emp_cov, target), scale

    def run(self, block_size: int | None = None, threads: int | str | None = 1) -> list[NNRow]:
        return [self.evaluate(n, block_size, threads) for n in self.widths]

    def width_pairs(self) -> list[tuple[int, int, float, float]]:
        """``(n_a, n_b, HS gap, combined scale)`` for every pair of simulated widths."""
        widths = sorted(self.mc_covariances)
        pairs = []
        for i, a in enumerate(widths):
            for b in widths[i + 1:]:
                cov_a, s_a = self.mc_covariances[a]
                cov_b, s_b = self.mc_covariances[b]
                pairs.append((a, b, hs_distance(cov_a, cov_b), math.hypot(s_a, s_b)))
        return pairs
