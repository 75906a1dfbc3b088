"""Gaussian draws, replicate-keyed random streams and the Mehler coupling."""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Callable, List, Tuple, TypeVar

import numpy as np

from chaoslab.utils.error_handling import DomainError
from chaoslab.utils.parallel import run_blocks

T = TypeVar("T")


def stream_rng(seed: int, tag: str, replicate: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream tag, replicate block)``.

    Streams for different tags or blocks are independent, and a block's
    numbers never depend on which thread draws them.
    """
    key = np.random.SeedSequence(
        entropy=int(seed) & (2 ** 64 - 1),
        spawn_key=(zlib.crc32(tag.encode("utf-8")), int(replicate)),
    )
    return np.random.Generator(np.random.Philox(key))


@dataclass(frozen=True, eq=False)
class GaussianDraw:
    """Realisations of ``W(h_1), ..., W(h_m)``; ``g`` is ``(m,)`` or ``(N, m)``."""

    g: np.ndarray
    seed_path: Tuple = field(default=())

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        if g.ndim not in (1, 2):
            raise DomainError("draw must be a vector or a batch of vectors", "g.ndim", g.ndim)
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @property
    def m(self) -> int:
        return self.g.shape[-1]

    @property
    def batch(self) -> np.ndarray:
        return np.atleast_2d(self.g)

    @classmethod
    def sample(cls, m: int, rng: np.random.Generator, n: int | None = None, seed_path: Tuple = ()) -> "GaussianDraw":
        shape = (m,) if n is None else (n, m)
        return cls(rng.standard_normal(shape), seed_path)


def mehler_coupled_draw(draw: GaussianDraw, independent, t: float) -> GaussianDraw:
    """``e^{-t} g + √(1 - e^{-2t}) g'`` with ``g'`` fresh standard normal.

    Args:
        draw: the conditioning draw ``g``.
        independent: a ``numpy`` Generator (``g'`` is sampled with ``draw``'s
            shape) or a :class:`GaussianDraw` / array holding ``g'``.
        t: coupling time, ``t >= 0``.
    """
    if t < 0:
        raise DomainError("Mehler coupling time must be nonnegative", "t", t)
    if isinstance(independent, np.random.Generator):
        fresh = independent.standard_normal(draw.g.shape)
    else:
        fresh = independent.g if isinstance(independent, GaussianDraw) else np.asarray(independent, dtype=float)
        if fresh.shape[-1] != draw.m:
            raise DomainError("independent draw has the wrong dimension", "m", fresh.shape[-1])
    decay = math.exp(-t)
    return GaussianDraw(decay * draw.g + math.sqrt(-math.expm1(-2.0 * t)) * fresh,
                        draw.seed_path + ("mehler", t))


def monte_carlo_blocks(
    fn: Callable[[np.random.Generator, int, int], T],
    n_total: int,
    seed: int,
    tag: str,
    block_size: int | None = None,
    threads: int | str | None = 1,
) -> List[T]:
    """Run ``fn(rng, block_index, n_in_block)`` on replicate-keyed streams.

    Each block gets ``stream_rng(seed, tag, block_index)``; the returned
    list is in block order.
    """

    def _block(index: int, start: int, stop: int) -> T:
        return fn(stream_rng(seed, tag, index), index, stop - start)

    return run_blocks(_block, n_total, block_size=block_size, threads=threads)
