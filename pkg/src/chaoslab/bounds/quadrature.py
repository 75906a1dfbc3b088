"""Quadrature evaluators for the improved (table-based) Stein bounds.

The white-noise bound needs

    ∫_{E²} ∫_{A³} T2(x,y,r1) T2(z,y,r1) T1(x,r2) T1(z,r2)

with ``T1(x, r) = ‖D_x F(r)‖_4`` and ``T2(x, y, r) = ‖D²_{x,y} F(r)‖_4``.
Integrating ``x`` and ``z`` first turns it into

    Σ_y Σ_{r1,r2} wA_y wE_{r1} wE_{r2} M(y, r1, r2)²,
    M(y, r1, r2) = Σ_x wA_x T2(x, y, r1) T1(x, r2),

so the five-fold integral costs one tensor contraction. Colored-noise
applications reduce their integral analytically and only call
:func:`improved_bound`.
"""

from __future__ import annotations

import math

import numpy as np

from chaoslab.utils.error_handling import DimensionError, DomainError, require_finite

SQRT3_HALF = math.sqrt(3.0) / 2.0


def improved_bound(integral: float) -> float:
    """``(√3/2)·√integral``; the caller adds ``½‖S_F - S_Z‖_HS``."""
    require_finite(integral, "bound integral")
    if integral < 0:
        if integral > -1e-12:
            integral = 0.0
        else:
            raise DomainError("bound integral must be nonnegative", "integral", integral)
    return SQRT3_HALF * math.sqrt(integral)


def imp_bound_integral(
    d1_table: np.ndarray,
    d2_table: np.ndarray,
    a_weights: np.ndarray,
    e_weights: np.ndarray,
) -> float:
    """The five-fold integral behind the white-noise bound.

    Args:
        d1_table: ``(nA, nE)`` values of ``‖D_x F(r)‖_4``.
        d2_table: ``(nA, nA, nE)`` values of ``‖D²_{x,y} F(r)‖_4``.
        a_weights: ``(nA,)`` quadrature weights on A.
        e_weights: ``(nE,)`` quadrature weights on E (the measure ν).
    """
    t1 = np.asarray(d1_table, dtype=float)
    t2 = np.asarray(d2_table, dtype=float)
    wa = np.asarray(a_weights, dtype=float)
    we = np.asarray(e_weights, dtype=float)
    n_a, n_e = wa.shape[0], we.shape[0]
    if t1.shape != (n_a, n_e) or t2.shape != (n_a, n_a, n_e):
        raise DimensionError(
            "derivative tables do not match the quadrature grids",
            expected=((n_a, n_e), (n_a, n_a, n_e)),
            actual=(t1.shape, t2.shape),
        )
    require_finite(t1, "first-derivative table")
    require_finite(t2, "second-derivative table")
    if (t1 < 0).any() or (t2 < 0).any():
        raise DomainError("derivative norm tables must be nonnegative", "tables", "negative entry")
    inner = np.einsum("x,xyr,xs->yrs", wa, t2, t1)
    return float(np.einsum("y,r,s,yrs->", wa, we, we, inner ** 2))


def imp_bound_quadrature(
    d1_table: np.ndarray,
    d2_table: np.ndarray,
    a_weights: np.ndarray,
    e_weights: np.ndarray,
) -> float:
    """``(√3/2)·√(five-fold integral)`` from derivative-norm tables."""
    return improved_bound(imp_bound_integral(d1_table, d2_table, a_weights, e_weights))
