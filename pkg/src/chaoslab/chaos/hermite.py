"""Probabilists' Hermite polynomials, Gaussian quadrature and Hermite expansions."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from chaoslab.utils.error_handling import DomainError, require_finite

logger = logging.getLogger(__name__)


def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite knots and weights for the standard Gaussian density.

    Matches the probabilists' Hermite polynomials; the weights sum to one.

    Args:
        n: number of quadrature points.

    Returns:
        ``(knots, weights)``.
    """
    knots, weights = np.polynomial.hermite.hermgauss(n)
    knots *= np.sqrt(2)
    weights /= np.sqrt(np.pi)
    return knots, weights


def gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre knots and weights on ``[a, b]``.

    Args:
        a: lower bound of the interval.
        b: upper bound of the interval.
        n: number of quadrature points.
    """
    knots, weights = np.polynomial.legendre.leggauss(n)
    knots_a_b = 0.5 * (b - a) * knots + 0.5 * (b + a)
    weights_a_b = 0.5 * (b - a) * weights
    return knots_a_b, weights_a_b


def composite_gauss_legendre(breaks, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss–Legendre on every panel between consecutive (sorted, deduplicated) breaks."""
    breaks = np.unique(np.asarray(breaks, dtype=float))
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a <= 0:
            continue
        x, w = gauss_legendre(a, b, n)
        nodes.append(x)
        weights.append(w)
    if not nodes:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(nodes), np.concatenate(weights)


def hermite_eval(q: int, x):
    """Probabilists' Hermite polynomial ``H_q(x)`` by the three-term recurrence.

    ``H_{p+1}(x) = x H_p(x) - p H_{p-1}(x)``, with ``H_0 = 1`` and ``H_1 = x``.
    Works elementwise on arrays.
    """
    if q < 0:
        raise DomainError("Hermite degree must be nonnegative", "q", q)
    x = np.asarray(x, dtype=float)
    prev, cur = np.ones_like(x), x.copy()
    if q == 0:
        return prev if prev.ndim else float(prev)
    for p in range(1, q):
        prev, cur = cur, x * cur - p * prev
    return cur if cur.ndim else float(cur)


def hermite_table(q_max: int, x) -> np.ndarray:
    """All ``H_0..H_{q_max}`` at ``x``; shape ``(q_max + 1,) + x.shape``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((q_max + 1,) + x.shape)
    out[0] = 1.0
    if q_max >= 1:
        out[1] = x
    for p in range(1, q_max):
        out[p + 1] = x * out[p] - p * out[p - 1]
    return out


@dataclass(frozen=True)
class HermiteCoefficients:
    """``c_q = E[f(N) H_q(N)] / q!`` for ``q = 0..Q``."""

    c: np.ndarray
    Q: int
    second_moment: float = float("nan")

    @property
    def variance_terms(self) -> np.ndarray:
        """``c_q² q!``, the variance carried by each chaos."""
        fact = np.array([math.factorial(q) for q in range(self.Q + 1)], dtype=float)
        return self.c ** 2 * fact

    @property
    def bessel_defect(self) -> float:
        """``E[f(N)²] - Σ c_q² q!``; nonnegative up to quadrature error."""
        return float(self.second_moment - self.variance_terms.sum())

    def hermite_rank(self, tol: float = 1e-12) -> int | None:
        """Smallest ``q >= 1`` with ``|c_q| > tol`` (``None`` for constant f)."""
        nonzero = np.flatnonzero(np.abs(self.c[1:]) > tol)
        return int(nonzero[0] + 1) if nonzero.size else None

    def to_dict(self) -> dict:
        return {
            "c": self.c.tolist(),
            "Q": self.Q,
            "second_moment": self.second_moment,
            "bessel_defect": self.bessel_defect,
            "hermite_rank": self.hermite_rank(),
        }


def hermite_expand(f: Callable, Q: int, quad_order: int = 64) -> HermiteCoefficients:
    """Hermite coefficients of ``f`` by Gauss–Hermite quadrature.

    Args:
        f: vectorised scalar function.
        Q: truncation order.
        quad_order: number of Gauss–Hermite nodes, at least ``Q + 1``.
    """
    if Q < 0:
        raise DomainError("truncation order must be nonnegative", "Q", Q)
    if quad_order < Q + 1:
        raise DomainError("quadrature order too small for truncation order", "quad_order", quad_order)
    x, w = gauss_hermite(quad_order)
    fx = np.asarray(f(x), dtype=float) * np.ones_like(x)
    require_finite(fx, "f at Gauss-Hermite nodes")
    table = hermite_table(Q, x)
    fact = np.array([math.factorial(q) for q in range(Q + 1)], dtype=float)
    c = table @ (w * fx) / fact
    coeffs = HermiteCoefficients(c=c, Q=Q, second_moment=float(np.sum(w * fx ** 2)))
    if coeffs.bessel_defect > 1e-8 * max(1.0, coeffs.second_moment):
        logger.info("Hermite expansion truncated at Q=%d leaves Bessel defect %.3e", Q, coeffs.bessel_defect)
    return coeffs


def gaussian_lp_norm(f: Callable, power: float = 4.0, quad_order: int = 64) -> float:
    """``(E|f(N)|^power)^{1/power}`` by Gauss–Hermite quadrature."""
    x, w = gauss_hermite(quad_order)
    fx = np.asarray(f(x), dtype=float) * np.ones_like(x)
    value = float(np.sum(w * np.abs(fx) ** power)) ** (1.0 / power)
    require_finite(value, "Gaussian moment")
    return value
