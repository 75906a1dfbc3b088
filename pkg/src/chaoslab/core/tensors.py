"""Dense symmetric tensor storage over a truncated Hilbert space.

A symmetric tensor of order ``n`` over ℌ (dimension ``m``) with one slot in
K (dimension ``p``) is stored as a ``(M, p)`` array, one row per sorted
multi-index ``α = (α_1 <= ... <= α_n)``. The stored value is the entry of
the dense tensor at ``α`` (equal at every permutation of ``α``), so the full
tensor norm is ``Σ mult(α) · coeff²`` with ``mult(α) = n! / Π a_j!`` and
``a_j`` the number of times ``j`` occurs in ``α``.

K indices are orthonormal coordinates: for a quadrature space
``L²(E, ν)`` with node values ``u_i`` and weights ``w_i`` the coordinate is
``√w_i u_i``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from chaoslab.utils.error_handling import DimensionError, DomainError, ErrorType


@dataclass(frozen=True, eq=False)
class HilbertSpec:
    """Truncated ℌ of dimension ``m`` and a K of ``p`` weighted nodes.

    ``slots`` counts ℌ factors folded into K (``ℌ^{⊗slots} ⊗ K_base``), the
    ℌ slots leading in the flat K index. ``parent`` is the spec with one
    slot fewer.
    """

    m: int
    p: int
    k_weights: np.ndarray
    slots: int = 0
    parent: Optional["HilbertSpec"] = field(default=None, repr=False)

    def __post_init__(self):
        if int(self.m) < 1 or int(self.p) < 1:
            raise DomainError("m and p must be positive", "m,p", (self.m, self.p))
        weights = np.asarray(self.k_weights, dtype=float).reshape(-1)
        if weights.shape != (self.p,):
            raise DimensionError("k_weights must have length p", self.p, weights.shape)
        if not np.all(weights > 0):
            raise DomainError("k_weights must be strictly positive", "k_weights", weights.min())
        weights.setflags(write=False)
        object.__setattr__(self, "k_weights", weights)

    @classmethod
    def euclidean(cls, m: int, p: int) -> "HilbertSpec":
        """Plain Euclidean K (all weights 1)."""
        return cls(m, p, np.ones(p))

    @property
    def base_p(self) -> int:
        return self.p // self.m ** self.slots

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.k_weights)

    def same_as(self, other: "HilbertSpec") -> bool:
        return (
            self.m == other.m
            and self.p == other.p
            and self.slots == other.slots
            and np.array_equal(self.k_weights, other.k_weights)
        )

    def check_same(self, other: "HilbertSpec") -> None:
        if not self.same_as(other):
            raise DimensionError(
                "Hilbert specs differ",
                expected=(self.m, self.p, self.slots),
                actual=(other.m, other.p, other.slots),
            )

    def lift(self, k: int = 1) -> "HilbertSpec":
        """Spec of ``ℌ^{⊗k} ⊗ K``; the new slots lead the flat K index."""
        if k < 0:
            raise DomainError("lift order must be nonnegative", "k", k)
        if k == 0:
            return self
        parent = self.lift(k - 1)
        return HilbertSpec(
            self.m,
            self.m ** k * self.p,
            np.tile(self.k_weights, self.m ** k),
            slots=self.slots + k,
            parent=parent,
        )

    def unlift(self) -> "HilbertSpec":
        if self.parent is None:
            raise DimensionError("spec carries no ℌ slot to remove", expected=">=1", actual=self.slots)
        return self.parent

    def to_coordinates(self, values: np.ndarray) -> np.ndarray:
        """Node values ``u_i`` (last axis) to orthonormal coordinates ``√w_i u_i``."""
        return np.asarray(values, dtype=float) * self.sqrt_weights

    def to_node_values(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords, dtype=float) / self.sqrt_weights

    def k_inner(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Weighted inner product of node-value vectors along the last axis."""
        return np.sum(self.k_weights * np.asarray(u) * np.asarray(v), axis=-1)


@lru_cache(maxsize=None)
def multi_indices(m: int, n: int) -> np.ndarray:
    """Sorted multi-indices of length ``n`` over ``range(m)``, shape ``(M, n)``."""
    rows = list(itertools.combinations_with_replacement(range(m), n))
    out = np.array(rows, dtype=np.intp).reshape(len(rows), n)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def occupation(m: int, n: int) -> np.ndarray:
    """Occupation numbers ``a_j`` for every sorted multi-index, shape ``(M, m)``."""
    idx = multi_indices(m, n)
    occ = np.zeros((idx.shape[0], m), dtype=np.intp)
    for col in range(n):
        np.add.at(occ, (np.arange(idx.shape[0]), idx[:, col]), 1)
    occ.setflags(write=False)
    return occ


@lru_cache(maxsize=None)
def multiplicities(m: int, n: int) -> np.ndarray:
    """Number of index tuples in each permutation orbit, ``n! / Π a_j!``."""
    occ = occupation(m, n)
    fact = np.array([math.factorial(k) for k in range(n + 1)], dtype=float)
    mult = math.factorial(n) / np.prod(fact[occ], axis=1)
    mult.setflags(write=False)
    return mult


def _rank_table(m: int, n: int) -> np.ndarray:
    """Dense lookup from an index tuple (as a flat mixed-radix number) to its row."""
    idx = multi_indices(m, n)
    table = np.full(m ** n, -1, dtype=np.intp)
    for row, alpha in enumerate(idx):
        for perm in set(itertools.permutations(alpha)):
            table[np.ravel_multi_index(perm, (m,) * n) if n else 0] = row
    return table


@lru_cache(maxsize=None)
def rank_table(m: int, n: int) -> np.ndarray:
    table = _rank_table(m, n)
    table.setflags(write=False)
    return table


def row_of(m: int, tuples: np.ndarray) -> np.ndarray:
    """Row index of arbitrary (unsorted) index tuples, shape ``(..., n)``."""
    tuples = np.asarray(tuples, dtype=np.intp)
    n = tuples.shape[-1]
    if n == 0:
        return np.zeros(tuples.shape[:-1], dtype=np.intp)
    flat = np.ravel_multi_index(tuple(np.moveaxis(tuples, -1, 0)), (m,) * n)
    return rank_table(m, n)[flat]


@dataclass(frozen=True, eq=False)
class SymmetricKernel:
    """An element of ℌ^{⊙n} ⊗ K in sorted multi-index storage."""

    spec: HilbertSpec
    order: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.order < 0:
            raise DomainError("kernel order must be nonnegative", "order", self.order)
        coeffs = np.array(self.coeffs, dtype=float)
        expected = (multi_indices(self.spec.m, self.order).shape[0], self.spec.p)
        if coeffs.shape != expected:
            raise DimensionError("kernel coefficient array has the wrong shape", expected, coeffs.shape)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, spec: HilbertSpec, order: int) -> "SymmetricKernel":
        return cls(spec, order, np.zeros((multi_indices(spec.m, order).shape[0], spec.p)))

    @classmethod
    def basis(cls, spec: HilbertSpec, alpha: Tuple[int, ...], k_index: int, value: float = 1.0) -> "SymmetricKernel":
        """Symmetrization of ``value · h_{α_1} ⊗ ... ⊗ h_{α_n} ⊗ k_i``.

        Indices are zero-based.
        """
        order = len(alpha)
        out = np.zeros((multi_indices(spec.m, order).shape[0], spec.p))
        row = int(row_of(spec.m, np.array(alpha, dtype=np.intp)))
        # the symmetrized dense tensor spreads value over the orbit evenly
        out[row, k_index] = value / multiplicities(spec.m, order)[row]
        return cls(spec, order, out)

    @classmethod
    def from_dense(cls, spec: HilbertSpec, dense: np.ndarray) -> "SymmetricKernel":
        """Read the sorted entries of an already symmetric dense array."""
        dense = np.asarray(dense, dtype=float)
        order = dense.ndim - 1
        idx = multi_indices(spec.m, order)
        if order == 0:
            return cls(spec, 0, dense.reshape(1, spec.p))
        return cls(spec, order, dense[tuple(idx.T)])

    @property
    def multiplicity(self) -> np.ndarray:
        return multiplicities(self.spec.m, self.order)

    def to_dense(self) -> np.ndarray:
        """Full ``(m,)*n + (p,)`` array."""
        m, n = self.spec.m, self.order
        if n == 0:
            return self.coeffs.reshape(self.spec.p).copy()
        grid = np.array(list(itertools.product(range(m), repeat=n)), dtype=np.intp)
        rows = row_of(m, grid)
        return self.coeffs[rows].reshape((m,) * n + (self.spec.p,))

    def norm_squared(self) -> float:
        return float(np.sum(self.multiplicity[:, None] * self.coeffs ** 2))

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def scaled(self, factor: float) -> "SymmetricKernel":
        return SymmetricKernel(self.spec, self.order, factor * self.coeffs)

    def __add__(self, other: "SymmetricKernel") -> "SymmetricKernel":
        self.spec.check_same(other.spec)
        if self.order != other.order:
            raise DimensionError("cannot add kernels of different order", self.order, other.order,
                                 error_type=ErrorType.ORDER_MISMATCH)
        return SymmetricKernel(self.spec, self.order, self.coeffs + other.coeffs)


def symmetrize(raw: np.ndarray, spec: HilbertSpec, order: Optional[int] = None) -> SymmetricKernel:
    """Average a dense order-``n`` array over all permutations of its ℌ axes.

    Args:
        raw: array of shape ``(m,)*n + (p,)``.
        spec: the Hilbert spec the array lives on.
        order: declared order; must match ``raw.ndim - 1`` when given.
    """
    raw = np.asarray(raw, dtype=float)
    n = raw.ndim - 1
    if order is not None and order != n:
        raise DimensionError("declared order does not match array rank", order, n,
                             error_type=ErrorType.ORDER_MISMATCH)
    if raw.shape != (spec.m,) * n + (spec.p,):
        raise DimensionError("array shape does not match spec", (spec.m,) * n + (spec.p,), raw.shape)
    if n <= 1:
        return SymmetricKernel.from_dense(spec, raw)
    acc = np.zeros_like(raw)
    for perm in itertools.permutations(range(n)):
        acc += np.transpose(raw, perm + (n,))
    return SymmetricKernel.from_dense(spec, acc / math.factorial(n))


def kernel_cross(f: SymmetricKernel, g: SymmetricKernel) -> np.ndarray:
    """``(p, p)`` matrix ``⟨f^{(i)}, g^{(j)}⟩_{ℌ^{⊗n}}``."""
    f.spec.check_same(g.spec)
    if f.order != g.order:
        raise DimensionError("kernels of different order", f.order, g.order,
                             error_type=ErrorType.ORDER_MISMATCH)
    return (f.multiplicity[:, None] * f.coeffs).T @ g.coeffs


def inner(f: SymmetricKernel, g: SymmetricKernel) -> float:
    """Inner product in ℌ^{⊗n} ⊗ K."""
    return float(np.trace(kernel_cross(f, g)))


def contract_r(f: SymmetricKernel, g: SymmetricKernel, r: int) -> np.ndarray:
    """The r-contraction ``f ⊗_r g`` with both K slots kept.

    Returns a dense array of shape ``(m,)*(n-r) + (m,)*(q-r) + (p, p)``: the
    free ℌ indices of ``f``, then those of ``g``, then the K index of ``f``
    and the K index of ``g``.
    """
    f.spec.check_same(g.spec)
    n, q = f.order, g.order
    if not 0 <= r <= min(n, q):
        raise DomainError("contraction index out of range", "r", r)
    fd, gd = f.to_dense(), g.to_dense()
    out = np.tensordot(fd, gd, axes=(list(range(n - r, n)), list(range(q - r, q))))
    # axes now: f free (n-r), f K, g free (q-r), g K
    return np.moveaxis(out, n - r, -2)


def contraction_norm(f: SymmetricKernel, g: SymmetricKernel, r: int) -> float:
    return float(np.linalg.norm(contract_r(f, g, r).ravel()))
