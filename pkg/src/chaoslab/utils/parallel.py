"""Replicate-block execution with a thread-count independent reduction order."""

from __future__ import annotations

import logging
import os
from typing import Callable, List, Sequence, Tuple, TypeVar

from joblib import Parallel, delayed

from chaoslab.utils.config import BLOCK_SIZE
from chaoslab.utils.error_handling import DomainError

logger = logging.getLogger(__name__)

T = TypeVar("T")


def block_ranges(n_total: int, block_size: int) -> List[Tuple[int, int, int]]:
    """Split ``n_total`` replicates into ``(block_index, start, stop)`` triples.

    The split depends only on ``n_total`` and ``block_size``, never on the
    number of workers.
    """
    if n_total < 0:
        raise DomainError("replicate count must be nonnegative", "n_total", n_total)
    if block_size < 1:
        raise DomainError("block size must be positive", "block_size", block_size)
    return [
        (index, start, min(start + block_size, n_total))
        for index, start in enumerate(range(0, n_total, block_size))
    ]


def resolve_threads(threads: int | str | None) -> int:
    """Map a thread setting (``int``, ``"auto"`` or ``None``) to a worker count."""
    if threads is None or threads == "":
        return 1
    if isinstance(threads, str):
        if threads.strip().lower() == "auto":
            return max(1, os.cpu_count() or 1)
        threads = int(threads)
    if threads < 1:
        raise DomainError("thread count must be at least 1", "threads", threads)
    return int(threads)


def run_blocks(
    fn: Callable[[int, int, int], T],
    n_total: int,
    block_size: int | None = None,
    threads: int | str | None = 1,
) -> List[T]:
    """Run ``fn(block_index, start, stop)`` for every block.

    Results come back ordered by block index whatever the worker count, so a
    caller that reduces them in list order gets identical sums for any
    ``threads``.
    """
    blocks = block_ranges(n_total, block_size or BLOCK_SIZE)
    n_jobs = min(resolve_threads(threads), max(1, len(blocks)))
    logger.debug("running %d blocks on %d threads", len(blocks), n_jobs)
    if n_jobs == 1:
        return [fn(index, start, stop) for index, start, stop in blocks]
    return Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(fn)(index, start, stop) for index, start, stop in blocks
    )


def ordered_sum(parts: Sequence):
    """Sum block partials strictly in list order."""
    total = None
    for part in parts:
        total = part if total is None else total + part
    return total
