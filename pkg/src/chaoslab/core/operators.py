"""Operators on K in orthonormal coordinates and their norms."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from chaoslab.core.tensors import HilbertSpec
from chaoslab.utils.error_handling import DimensionError, DomainError, ErrorType


@dataclass(frozen=True, eq=False)
class KOperator:
    """A ``p × p`` operator on K, entries in the orthonormal K basis."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionError("K operator must be a square matrix", "(p, p)", entries.shape)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zeros(cls, p: int) -> "KOperator":
        return cls(np.zeros((p, p)))

    @classmethod
    def from_kernel(cls, spec: HilbertSpec, kernel: np.ndarray) -> "KOperator":
        """Covariance-type operator from a kernel ``C(x_i, x_j)`` on the K nodes."""
        sw = spec.sqrt_weights
        return cls(sw[:, None] * np.asarray(kernel, dtype=float) * sw[None, :])

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    def symmetric_part(self) -> "KOperator":
        return KOperator(0.5 * (self.entries + self.entries.T))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.entries + self.entries.T))

    def is_psd(self, tol: float = 1e-10) -> bool:
        return bool(self.eigenvalues().min(initial=0.0) >= -tol)

    def __sub__(self, other: "KOperator") -> "KOperator":
        if other.p != self.p:
            raise DimensionError("operator sizes differ", self.p, other.p)
        return KOperator(self.entries - other.entries)


@dataclass(frozen=True)
class KNorms:
    trace: float
    hs: float
    opnorm: float

    def to_dict(self) -> dict:
        return asdict(self)


def k_operator_norms(op: KOperator | np.ndarray) -> KNorms:
    """Trace, Hilbert–Schmidt and operator norm of a K operator.

    The HS norm is the Frobenius norm of the orthonormal-coordinate matrix;
    the operator norm is its largest singular value.
    """
    if not isinstance(op, KOperator):
        op = KOperator(op)
    entries = op.entries
    singular = np.linalg.svd(entries, compute_uv=False)
    return KNorms(
        trace=float(np.trace(entries)),
        hs=float(np.linalg.norm(entries, "fro")),
        opnorm=float(singular[0]) if singular.size else 0.0,
    )


def hs_distance(a: KOperator | np.ndarray, b: KOperator | np.ndarray) -> float:
    a = a.entries if isinstance(a, KOperator) else np.asarray(a, dtype=float)
    b = b.entries if isinstance(b, KOperator) else np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError("operator sizes differ", a.shape, b.shape)
    return float(np.linalg.norm(a - b, "fro"))


def psd_square_root_factor(op: KOperator, tol: float = 1e-10) -> np.ndarray:
    """Matrix ``A`` with ``A Aᵀ = op`` for a symmetric PSD operator.

    Eigenvalues below ``-tol`` are rejected; those in ``[-tol, 0]`` are
    clamped to zero.
    """
    sym = 0.5 * (op.entries + op.entries.T)
    values, vectors = np.linalg.eigh(sym)
    if values.size and values.min() < -tol:
        raise DomainError(
            "covariance operator is not positive semidefinite",
            "min_eigenvalue",
            float(values.min()),
            error_type=ErrorType.NOT_PSD,
        )
    return vectors * np.sqrt(np.clip(values, 0.0, None))
