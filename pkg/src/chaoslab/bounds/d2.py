"""Monte Carlo lower estimates of the d₂ distance.

d₂ is a supremum over test functions with first and second Fréchet
derivatives bounded by one. Restricting it to a finite dictionary of
admissible cosines gives a lower estimate; the cosines also have closed-form
Gaussian expectations, which the tests use as oracles.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from chaoslab.chaos.functional import ChaosFunctional, eval_chaos
from chaoslab.chaos.sampling import monte_carlo_blocks, stream_rng
from chaoslab.core.operators import KOperator, psd_square_root_factor
from chaoslab.utils.error_handling import DimensionError, DomainError, ErrorType
from chaoslab.utils.parallel import ordered_sum

logger = logging.getLogger(__name__)

DEFAULT_RADII = (0.5, 1.0, 2.0, 4.0)

Sampler = Callable[[int, np.random.Generator], np.ndarray]


@dataclass(frozen=True, eq=False)
class TestFunctional:
    """``φ(v) = c·cos(⟨v, a⟩_K + b)`` with ``c = 1 / max(‖a‖, ‖a‖², 1)``."""

    __test__ = False  # not a pytest class

    a: np.ndarray
    b: float
    c: float

    @classmethod
    def admissible(cls, a, b: float) -> "TestFunctional":
        a = np.asarray(a, dtype=float)
        norm = float(np.linalg.norm(a))
        return cls(a, float(b), 1.0 / max(norm, norm ** 2, 1.0))

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.c * np.cos(np.asarray(v) @ self.a + self.b)

    def gaussian_expectation(self, covariance: np.ndarray) -> float:
        """``E φ(Z)`` for centered Gaussian ``Z`` with the given covariance."""
        variance = float(self.a @ np.asarray(covariance) @ self.a)
        return self.c * math.cos(self.b) * math.exp(-0.5 * variance)


def cosine_dictionary(
    p: int,
    rng: np.random.Generator,
    size: int = 128,
    radii: Sequence[float] = DEFAULT_RADII,
) -> list[TestFunctional]:
    """Cosines with directions on the K sphere, radii cycling through ``radii``."""
    if size < 1:
        raise DomainError("dictionary must not be empty", "size", size, error_type=ErrorType.EMPTY_INPUT)
    directions = rng.standard_normal((size, p))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    phases = rng.uniform(0.0, 2.0 * math.pi, size)
    return [
        TestFunctional.admissible(radii[k % len(radii)] * directions[k], phases[k])
        for k in range(size)
    ]


def gaussian_sampler(S_Z: KOperator | np.ndarray) -> Sampler:
    """Sampler of ``N(0, S_Z)`` in orthonormal K coordinates."""
    op = S_Z if isinstance(S_Z, KOperator) else KOperator(S_Z)
    factor = psd_square_root_factor(op)

    def sample(n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal((n, factor.shape[1])) @ factor.T

    return sample


def chaos_sampler(F: ChaosFunctional) -> Sampler:
    def sample(n: int, rng: np.random.Generator) -> np.ndarray:
        return eval_chaos(F, rng.standard_normal((n, F.spec.m)))

    return sample


@dataclass(frozen=True)
class D2Estimate:
    value: float
    stderr: float
    best_index: int
    n_mc: int

    def to_dict(self) -> dict:
        return asdict(self)


def d2_lower_estimate(
    sampler_F: Sampler,
    sampler_Z: Sampler,
    dictionary: Sequence[TestFunctional],
    n_mc: int,
    seed: int = 0,
    tag: str = "d2",
    block_size: int | None = None,
    threads: int | str | None = 1,
) -> D2Estimate:
    """``max_φ |mean φ(F) - mean φ(Z)|`` over the dictionary.

    Both samplers read the same replicate-keyed stream (common random
    numbers), and the standard error is that of the paired difference for
    the maximising ``φ``.
    """
    if not dictionary:
        raise DomainError("test-function dictionary is empty", "dictionary", 0, error_type=ErrorType.EMPTY_INPUT)
    if n_mc < 2:
        raise DomainError("at least two Monte Carlo replicates are needed", "n_mc", n_mc)
    directions = np.stack([phi.a for phi in dictionary])
    phases = np.array([phi.b for phi in dictionary])
    amplitudes = np.array([phi.c for phi in dictionary])

    def block(rng, index, n):
        x_f = np.asarray(sampler_F(n, rng))
        x_z = np.asarray(sampler_Z(n, stream_rng(seed, tag, index)))
        if x_f.shape != x_z.shape or x_f.shape[1] != directions.shape[1]:
            raise DimensionError("samplers disagree on the K dimension", x_f.shape, x_z.shape)
        diff = amplitudes * (np.cos(x_f @ directions.T + phases) - np.cos(x_z @ directions.T + phases))
        return np.stack([diff.sum(axis=0), (diff ** 2).sum(axis=0)])

    sums = ordered_sum(monte_carlo_blocks(block, n_mc, seed, tag, block_size, threads))
    mean = sums[0] / n_mc
    var = np.clip(sums[1] / n_mc - mean ** 2, 0.0, None) * n_mc / (n_mc - 1)
    best = int(np.argmax(np.abs(mean)))
    return D2Estimate(
        value=float(abs(mean[best])),
        stderr=float(math.sqrt(var[best] / n_mc)),
        best_index=best,
        n_mc=n_mc,
    )
