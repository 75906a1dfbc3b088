"""Covariance operators, the carré-du-champ and the Malliavin–Stein bounds."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from chaoslab.bounds.quadrature import improved_bound, imp_bound_integral
from chaoslab.chaos.functional import ChaosFunctional, chaos_inner, eval_chaos, malliavin_derivative
from chaoslab.chaos.sampling import GaussianDraw, monte_carlo_blocks
from chaoslab.core.operators import KOperator, hs_distance
from chaoslab.utils.error_handling import DimensionError, DomainError, ErrorType
from chaoslab.utils.parallel import ordered_sum

logger = logging.getLogger(__name__)

MEAN_TOLERANCE = 1e-12


def covariance_operator(F: ChaosFunctional) -> KOperator:
    """``S_F`` with entries ``Σ_n n! ⟨f_n^{(i)}, f_n^{(j)}⟩``."""
    return chaos_inner(F, F)[0].symmetric_part()


def _require_centered(F: ChaosFunctional) -> None:
    if np.abs(F.mean).max(initial=0.0) > MEAN_TOLERANCE:
        raise DomainError(
            "functional must be centered",
            "mean",
            float(np.abs(F.mean).max()),
            error_type=ErrorType.NONZERO_MEAN,
        )


def _require_replicates(n_mc: int) -> None:
    if n_mc < 2:
        raise DomainError("at least two Monte Carlo replicates are needed", "n_mc", n_mc)


def _as_matrix(op, p: int) -> np.ndarray:
    entries = op.entries if isinstance(op, KOperator) else np.asarray(op, dtype=float)
    if entries.shape != (p, p):
        raise DimensionError("target covariance has the wrong size", (p, p), entries.shape)
    return entries


@dataclass(frozen=True, eq=False)
class GammaSample:
    """``⟨DF, -DL^{-1}F⟩_ℌ`` at one draw (``(p, p)``) or a batch (``(N, p, p)``)."""

    matrix: np.ndarray


class GammaEvaluator:
    """Precomputes ``DF`` and ``-DL^{-1}F`` once for repeated evaluation."""

    def __init__(self, F: ChaosFunctional):
        self.spec = F.spec
        self.derivative = malliavin_derivative(F, 1)
        inverse = F.centered().scale_orders([1.0 / n for n in range(1, F.max_order + 1)])
        self.inverse_derivative = malliavin_derivative(inverse, 1)

    def __call__(self, g: np.ndarray) -> np.ndarray:
        m, p = self.spec.m, self.spec.p
        g = np.atleast_2d(g)
        a = eval_chaos(self.derivative, g).reshape(-1, m, p)
        b = eval_chaos(self.inverse_derivative, g).reshape(-1, m, p)
        return np.einsum("nji,njk->nik", a, b)


def gamma_sample(F: ChaosFunctional, draw: GaussianDraw) -> GammaSample:
    if draw.m != F.spec.m:
        raise DimensionError("draw dimension does not match ℌ dimension", F.spec.m, draw.m)
    values = GammaEvaluator(F)(draw.g)
    return GammaSample(values[0] if draw.g.ndim == 1 else values)


@dataclass(frozen=True, eq=False)
class GammaMean:
    """Monte Carlo mean of ``Γ`` with entrywise standard errors."""

    mean: np.ndarray
    stderr: np.ndarray
    n_mc: int

    def z_scores(self, target) -> np.ndarray:
        target = target.entries if isinstance(target, KOperator) else np.asarray(target, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.abs(self.mean - target) / self.stderr
        # entries with zero spread must match exactly
        return np.where(self.stderr > 0, z, np.where(np.abs(self.mean - target) > 1e-12, np.inf, 0.0))


def gamma_mean(
    F: ChaosFunctional,
    n_mc: int,
    seed: int = 0,
    block_size: int | None = None,
    threads: int | str | None = 1,
) -> GammaMean:
    """Estimate ``E[Γ]``, which equals ``S_F`` for a centered functional."""
    _require_replicates(n_mc)
    gamma = GammaEvaluator(F)

    def block(rng, index, n):
        values = gamma(rng.standard_normal((n, F.spec.m)))
        return np.stack([values.sum(axis=0), (values ** 2).sum(axis=0)])

    sums = ordered_sum(monte_carlo_blocks(block, n_mc, seed, "stein.gamma_mean", block_size, threads))
    mean = sums[0] / n_mc
    var = np.clip(sums[1] / n_mc - mean ** 2, 0.0, None) * n_mc / (n_mc - 1)
    return GammaMean(mean, np.sqrt(var / n_mc), n_mc)


@dataclass(frozen=True)
class MsbcResult:
    msbc: float
    gamma_term: float
    cov_gap: float
    msbc_stderr: float
    n_mc: int

    def to_dict(self) -> dict:
        return asdict(self)


def msbc_bound(
    F: ChaosFunctional,
    S_Z,
    n_mc: int,
    seed: int = 0,
    block_size: int | None = None,
    threads: int | str | None = 1,
) -> MsbcResult:
    """Malliavin–Stein bound ``½‖Γ - S_Z‖_{L²(Ω; K⊗K)}`` and its triangle split.

    ``gamma_term`` uses the same draws with ``S_F`` in place of ``S_Z``, so
    ``msbc <= gamma_term + cov_gap`` holds up to rounding.
    """
    _require_centered(F)
    _require_replicates(n_mc)
    p = F.spec.p
    target = _as_matrix(S_Z, p)
    s_f = covariance_operator(F).entries
    gamma = GammaEvaluator(F)

    def block(rng, index, n):
        values = gamma(rng.standard_normal((n, F.spec.m)))
        dev_z = np.sum((values - target) ** 2, axis=(1, 2))
        dev_f = np.sum((values - s_f) ** 2, axis=(1, 2))
        return np.array([dev_z.sum(), (dev_z ** 2).sum(), dev_f.sum()])

    sums = ordered_sum(monte_carlo_blocks(block, n_mc, seed, "stein.gamma", block_size, threads))
    mean_z = sums[0] / n_mc
    var_z = max(sums[1] / n_mc - mean_z ** 2, 0.0) * n_mc / (n_mc - 1)
    se_mean = math.sqrt(var_z / n_mc)
    msbc = 0.5 * math.sqrt(max(mean_z, 0.0))
    stderr = se_mean / (4.0 * math.sqrt(mean_z)) if mean_z > 0 else 0.0
    return MsbcResult(
        msbc=msbc,
        gamma_term=0.5 * math.sqrt(max(sums[2] / n_mc, 0.0)),
        cov_gap=0.5 * hs_distance(s_f, target),
        msbc_stderr=stderr,
        n_mc=n_mc,
    )


def _derivative_batches(F: ChaosFunctional):
    D1 = malliavin_derivative(F, 1)
    D2 = malliavin_derivative(F, 2)
    m, p = F.spec.m, F.spec.p

    def evaluate(g):
        first = eval_chaos(D1, g).reshape(-1, m, p)
        second = eval_chaos(D2, g).reshape(-1, m, m, p)
        return first, second

    return evaluate


def contraction_square_norm(second: np.ndarray) -> np.ndarray:
    """``‖D²F ⊗_1 D²F‖²`` per draw for ``second`` of shape ``(N, m, m, p)``."""
    contracted = np.einsum("nabi,ncbj->naicj", second, second)
    return np.sum(contracted ** 2, axis=(1, 2, 3, 4))


def operator_norm_flattened(second: np.ndarray) -> np.ndarray:
    """``‖D²F‖_{ℌ⊗K→ℌ}`` per draw: top singular value of the ``m × (m·p)`` flattening."""
    n, m = second.shape[0], second.shape[1]
    return np.linalg.svd(second.reshape(n, m, -1), compute_uv=False)[:, 0]


@dataclass(frozen=True)
class SecondOrderBounds:
    thm1: float
    thm2: float
    per_draw_ordered: bool
    n_mc: int

    def to_dict(self) -> dict:
        return asdict(self)


def second_order_bounds(
    F: ChaosFunctional,
    n_mc: int,
    seed: int = 0,
    block_size: int | None = None,
    threads: int | str | None = 1,
) -> SecondOrderBounds:
    """Second-order Poincaré bounds.

    ``thm1 = (E‖D²F‖_op⁴)^{1/4} (E‖DF‖⁴)^{1/4}`` and ``thm2`` with
    ``‖D²F ⊗_1 D²F‖²`` in place of ``‖D²F‖_op⁴``. The per-draw ordering
    ``‖D²F‖_op⁴ <= ‖D²F ⊗_1 D²F‖²`` is verified on every draw.
    """
    _require_centered(F)
    _require_replicates(n_mc)
    evaluate = _derivative_batches(F)

    def block(rng, index, n):
        first, second = evaluate(rng.standard_normal((n, F.spec.m)))
        op4 = operator_norm_flattened(second) ** 4
        contraction = contraction_square_norm(second)
        grad4 = np.sum(first ** 2, axis=(1, 2)) ** 2
        ordered = bool(np.all(op4 <= contraction * (1 + 1e-10) + 1e-300))
        return np.array([op4.sum(), contraction.sum(), grad4.sum(), float(ordered)])

    parts = monte_carlo_blocks(block, n_mc, seed, "stein.second_order", block_size, threads)
    sums = ordered_sum([part[:3] for part in parts])
    ordered = all(part[3] == 1.0 for part in parts)
    if not ordered:
        logger.warning("operator-norm term exceeded the contraction term on some draw")
    grad = (sums[2] / n_mc) ** 0.25
    return SecondOrderBounds(
        thm1=(sums[0] / n_mc) ** 0.25 * grad,
        thm2=(sums[1] / n_mc) ** 0.25 * grad,
        per_draw_ordered=ordered,
        n_mc=n_mc,
    )


@dataclass(frozen=True)
class ImprovedBounds:
    """Table-based bounds without the ``½‖S_F - S_Z‖_HS`` term."""

    mb1: float
    mb2: float
    n_mc: int

    def to_dict(self) -> dict:
        return asdict(self)


def improved_bounds(
    F: ChaosFunctional,
    n_mc: int,
    seed: int = 0,
    block_size: int | None = None,
    threads: int | str | None = 1,
) -> ImprovedBounds:
    """Moment-table bound ``mb1`` and contraction-form bound ``mb2``.

    A is the ℌ basis with counting measure and E the orthonormal K basis;
    in these coordinates the ν weights cancel.
    """
    _require_replicates(n_mc)
    m, p = F.spec.m, F.spec.p
    evaluate = _derivative_batches(F)

    def block(rng, index, n):
        first, second = evaluate(rng.standard_normal((n, m)))
        pair_first = np.einsum("nxr,nzr->nxzr", first, first)
        pair_second = np.einsum("nxyr,nzyr->nxzr", second, second)
        return (
            np.sum(first ** 4, axis=0),
            np.sum(second ** 4, axis=0),
            np.sum(pair_first ** 2, axis=0),
            np.sum(pair_second ** 2, axis=0),
        )

    parts = monte_carlo_blocks(block, n_mc, seed, "stein.improved", block_size, threads)
    t1 = (ordered_sum([part[0] for part in parts]) / n_mc) ** 0.25
    t2 = (ordered_sum([part[1] for part in parts]) / n_mc) ** 0.25
    first_pairs = np.sqrt(ordered_sum([part[2] for part in parts]) / n_mc)
    second_pairs = np.sqrt(ordered_sum([part[3] for part in parts]) / n_mc)

    mb1 = improved_bound(imp_bound_integral(t1, t2, np.ones(m), np.ones(p)))
    integral2 = float(np.sum(second_pairs.sum(axis=2) * first_pairs.sum(axis=2)))
    return ImprovedBounds(mb1=mb1, mb2=improved_bound(integral2), n_mc=n_mc)
