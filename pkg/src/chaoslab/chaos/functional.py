"""K-valued Wiener chaos functionals and their Malliavin calculus.

A :class:`ChaosFunctional` is ``F = E[F] + Σ_{n=1}^{N} I_n(f_n)`` with
``f_n`` a :class:`~chaoslab.core.tensors.SymmetricKernel`. Everything in this
module is exact at the truncation: derivatives, divergence and the
Ornstein–Uhlenbeck operators are per-order rescalings and re-indexings of the
kernel coefficients.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np

from chaoslab.chaos.hermite import hermite_table
from chaoslab.chaos.sampling import GaussianDraw
from chaoslab.core.operators import KOperator
from chaoslab.core.tensors import (
    HilbertSpec,
    SymmetricKernel,
    kernel_cross,
    multi_indices,
    multiplicities,
    occupation,
    row_of,
)
from chaoslab.utils.error_handling import DimensionError, DomainError, ErrorType

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ChaosFunctional:
    """``mean + Σ_n I_n(kernels[n-1])`` on ``spec``."""

    spec: HilbertSpec
    mean: np.ndarray
    kernels: Tuple[SymmetricKernel, ...] = ()

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        if mean.shape != (self.spec.p,):
            raise DimensionError("mean must be a K vector", self.spec.p, mean.shape)
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        kernels = tuple(self.kernels)
        for n, kernel in enumerate(kernels, start=1):
            if kernel.order != n:
                raise DimensionError("kernels must be listed by order 1..N", n, kernel.order,
                                     error_type=ErrorType.ORDER_MISMATCH)
            self.spec.check_same(kernel.spec)
        object.__setattr__(self, "kernels", kernels)

    @classmethod
    def constant(cls, spec: HilbertSpec, mean=None) -> "ChaosFunctional":
        return cls(spec, np.zeros(spec.p) if mean is None else mean, ())

    @classmethod
    def from_kernels(cls, spec: HilbertSpec, kernels: Sequence[SymmetricKernel], mean=None) -> "ChaosFunctional":
        """Build from kernels of any orders; missing orders are zero."""
        by_order = {k.order: k for k in kernels}
        top = max(by_order, default=0)
        if 0 in by_order:
            mean = (np.zeros(spec.p) if mean is None else np.asarray(mean)) + by_order.pop(0).coeffs[0]
        ordered = tuple(by_order.get(n, SymmetricKernel.zeros(spec, n)) for n in range(1, top + 1))
        return cls(spec, np.zeros(spec.p) if mean is None else mean, ordered)

    @property
    def max_order(self) -> int:
        return len(self.kernels)

    def kernel(self, n: int) -> SymmetricKernel:
        """Order-``n`` kernel (zero beyond the truncation)."""
        if 1 <= n <= self.max_order:
            return self.kernels[n - 1]
        return SymmetricKernel.zeros(self.spec, n)

    def centered(self) -> "ChaosFunctional":
        return ChaosFunctional(self.spec, np.zeros(self.spec.p), self.kernels)

    def truncated(self, max_order: int) -> "ChaosFunctional":
        return ChaosFunctional(self.spec, self.mean, self.kernels[:max_order])

    def scale_orders(self, factors: Sequence[float], mean_factor: float = 1.0) -> "ChaosFunctional":
        """Multiply ``f_n`` by ``factors[n-1]`` and the mean by ``mean_factor``."""
        return ChaosFunctional(
            self.spec,
            mean_factor * self.mean,
            tuple(k.scaled(float(c)) for k, c in zip(self.kernels, factors)),
        )

    def variance(self) -> np.ndarray:
        """Per-coordinate variance ``Σ n! ‖f_n^{(i)}‖²``."""
        out = np.zeros(self.spec.p)
        for n, k in enumerate(self.kernels, start=1):
            out += math.factorial(n) * np.sum(k.multiplicity[:, None] * k.coeffs ** 2, axis=0)
        return out

    def __add__(self, other: "ChaosFunctional") -> "ChaosFunctional":
        self.spec.check_same(other.spec)
        top = max(self.max_order, other.max_order)
        return ChaosFunctional(
            self.spec,
            self.mean + other.mean,
            tuple(self.kernel(n) + other.kernel(n) for n in range(1, top + 1)),
        )

    def __sub__(self, other: "ChaosFunctional") -> "ChaosFunctional":
        return self + other.scale_orders([-1.0] * other.max_order, mean_factor=-1.0)

    def max_abs_difference(self, other: "ChaosFunctional") -> float:
        """Largest coefficient discrepancy, kernels and mean."""
        diff = self - other
        values = [np.abs(diff.mean).max(initial=0.0)]
        values += [np.abs(k.coeffs).max(initial=0.0) for k in diff.kernels]
        return float(max(values))


def _draw_matrix(spec: HilbertSpec, draw) -> np.ndarray:
    g = draw.g if isinstance(draw, GaussianDraw) else np.asarray(draw, dtype=float)
    if g.shape[-1] != spec.m:
        raise DimensionError("draw dimension does not match ℌ dimension", spec.m, g.shape[-1])
    return np.atleast_2d(g)


def chaos_basis_values(spec: HilbertSpec, order: int, g: np.ndarray) -> np.ndarray:
    """``Π_j H_{a_j}(g_j)`` for every sorted multi-index; shape ``(M, N)``."""
    table = hermite_table(order, g)              # (order+1, N, m)
    occ = occupation(spec.m, order)               # (M, m)
    picked = table[occ, :, np.arange(spec.m)]     # (M, m, N)
    return np.prod(picked, axis=1)


def eval_chaos(F: ChaosFunctional, draw) -> np.ndarray:
    """Value of ``F`` at a draw, in orthonormal K coordinates.

    Returns ``(p,)`` for a single draw and ``(N, p)`` for a batch.
    """
    g = _draw_matrix(F.spec, draw)
    out = np.tile(F.mean, (g.shape[0], 1))
    for n, kernel in enumerate(F.kernels, start=1):
        basis = chaos_basis_values(F.spec, n, g)
        out += basis.T @ (kernel.multiplicity[:, None] * kernel.coeffs)
    single = (draw.g if isinstance(draw, GaussianDraw) else np.asarray(draw)).ndim == 1
    return out[0] if single else out


def chaos_inner(F: ChaosFunctional, G: ChaosFunctional) -> Tuple[KOperator, float]:
    """Cross-covariance operator and total covariance of two functionals.

    Entry ``(i, j)`` is ``Σ_n n! ⟨f_n^{(i)}, g_n^{(j)}⟩``; orders never mix.
    The scalar is the trace, ``E⟨F - EF, G - EG⟩_K``.
    """
    F.spec.check_same(G.spec)
    p = F.spec.p
    cross = np.zeros((p, p))
    for n in range(1, min(F.max_order, G.max_order) + 1):
        cross += math.factorial(n) * kernel_cross(F.kernel(n), G.kernel(n))
    return KOperator(cross), float(np.trace(cross))


def expected_inner(F: ChaosFunctional, G: ChaosFunctional) -> float:
    """``E⟨F, G⟩_K`` including the means."""
    return float(F.mean @ G.mean) + chaos_inner(F, G)[1]


@lru_cache(maxsize=None)
def _derivative_rows(m: int, n: int, k: int) -> np.ndarray:
    """Rows of ``sort(β + j)`` for every order-``(n-k)`` β and ``j ∈ range(m)^k``."""
    betas = multi_indices(m, n - k)
    js = np.array(list(itertools.product(range(m), repeat=k)), dtype=np.intp).reshape(-1, k)
    tuples = np.concatenate(
        [np.repeat(betas[:, None, :], js.shape[0], axis=1),
         np.repeat(js[None, :, :], betas.shape[0], axis=0)],
        axis=2,
    )
    rows = row_of(m, tuples)
    rows.setflags(write=False)
    return rows


def malliavin_derivative(F: ChaosFunctional, order: int = 1) -> ChaosFunctional:
    """``D^k F`` as a functional on ``spec.lift(k)``.

    The order-``n`` kernel contributes ``n!/(n-k)! · f_n(β, j_1..j_k)`` at
    chaos order ``n - k``; the ℌ indices ``j`` lead the lifted K index. The
    order-``k`` kernel lands in the mean.
    """
    if order not in (1, 2):
        raise DomainError("only first and second derivatives are supported", "order", order)
    spec, m, p = F.spec, F.spec.m, F.spec.p
    lifted = spec.lift(order)
    mean = np.zeros(lifted.p)
    kernels = []
    for n in range(order, F.max_order + 1):
        rows = _derivative_rows(m, n, order)                    # (Mβ, m^k)
        factor = math.factorial(n) / math.factorial(n - order)
        coeffs = factor * F.kernel(n).coeffs[rows]              # (Mβ, m^k, p)
        coeffs = coeffs.reshape(rows.shape[0], lifted.p)
        if n == order:
            mean = coeffs[0]
        else:
            kernels.append(SymmetricKernel(lifted, n - order, coeffs))
    return ChaosFunctional(lifted, mean, tuple(kernels))


@lru_cache(maxsize=None)
def _divergence_rows(m: int, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """For each sorted α of length k+1: rows of α without position ℓ, and α_ℓ."""
    alphas = multi_indices(m, k + 1)
    drop_rows = np.empty((alphas.shape[0], k + 1), dtype=np.intp)
    for ell in range(k + 1):
        rest = np.delete(alphas, ell, axis=1)
        drop_rows[:, ell] = row_of(m, rest)
    slots = np.array(alphas, dtype=np.intp)
    drop_rows.setflags(write=False)
    slots.setflags(write=False)
    return drop_rows, slots


def divergence(V: ChaosFunctional) -> ChaosFunctional:
    """Skorohod integral ``δ(V)`` of an ℌ⊗K-valued functional.

    The order-``k`` kernel ``g_k`` (ℌ slot appended) becomes
    ``I_{k+1}(sym g_k)``; the mean ``φ`` becomes ``I_1(φ)``. The result has
    zero mean.
    """
    base = V.spec.unlift()
    m, p = base.m, base.p
    kernels = []
    parts = [V.mean.reshape(1, m * p)] + [k.coeffs for k in V.kernels]
    for k, coeffs in enumerate(parts):
        drop_rows, slots = _divergence_rows(m, k)
        g = coeffs.reshape(coeffs.shape[0], m, p)
        # (1/(k+1)) Σ_ℓ g[α∖α_ℓ, α_ℓ, :]
        new = g[drop_rows, slots, :].mean(axis=1)
        kernels.append(SymmetricKernel(base, k + 1, new))
    return ChaosFunctional(base, np.zeros(p), tuple(kernels))


class OUOperator(str, Enum):
    """Ornstein–Uhlenbeck operators acting order by order."""

    SEMIGROUP = "P_t"
    GENERATOR = "L"
    PSEUDO_INVERSE = "Linv"


def pseudo_inverse(F: ChaosFunctional) -> Tuple[ChaosFunctional, np.ndarray]:
    """``L^{-1}`` on ``F - E[F]``; also returns the dropped mean."""
    factors = [-1.0 / n for n in range(1, F.max_order + 1)]
    return F.centered().scale_orders(factors, mean_factor=0.0), F.mean.copy()


def ou_apply(F: ChaosFunctional, op: OUOperator | str, t: float = 0.0) -> ChaosFunctional:
    """Apply ``P_t`` (``e^{-nt}``), ``L`` (``-n``) or ``L^{-1}`` (``-1/n``).

    ``L^{-1}`` acts on the centered part; a nonzero mean is dropped and logged.
    """
    op = OUOperator(op)
    orders = range(1, F.max_order + 1)
    if op is OUOperator.SEMIGROUP:
        if t < 0:
            raise DomainError("semigroup time must be nonnegative", "t", t)
        return F.scale_orders([math.exp(-n * t) for n in orders])
    if op is OUOperator.GENERATOR:
        return F.scale_orders([-float(n) for n in orders], mean_factor=0.0)
    result, dropped = pseudo_inverse(F)
    if np.any(dropped != 0):
        logger.debug("L^-1 dropped mean with norm %.3e", float(np.linalg.norm(dropped)))
    return result


def random_functional(
    spec: HilbertSpec,
    max_order: int,
    rng: np.random.Generator,
    centered: bool = True,
    decay: float = 1.0,
) -> ChaosFunctional:
    """Random functional with Gaussian coefficients.

    Order ``n`` coefficients are scaled by
    ``decay**(n-1) / √(n! · mult · r_n)`` where ``r_n`` is the number of
    sorted multi-indices of order ``n``, so each order contributes variance
    about ``decay**(2(n-1))`` per K coordinate.
    """
    kernels = []
    for n in range(1, max_order + 1):
        mult = multiplicities(spec.m, n)
        raw = rng.standard_normal((mult.shape[0], spec.p))
        scale = decay ** (n - 1) / np.sqrt(math.factorial(n) * mult * mult.shape[0])
        kernels.append(SymmetricKernel(spec, n, raw * scale[:, None]))
    mean = np.zeros(spec.p) if centered else rng.standard_normal(spec.p)
    return ChaosFunctional(spec, mean, tuple(kernels))


def poincare_sides(F: ChaosFunctional) -> Tuple[float, float]:
    """Exact ``(E‖F - EF‖²_K, E‖DF‖²_{ℌ⊗K})``."""
    var = float(F.variance().sum())
    DF = malliavin_derivative(F, 1)
    grad = float(DF.mean @ DF.mean + DF.variance().sum())
    return var, grad
