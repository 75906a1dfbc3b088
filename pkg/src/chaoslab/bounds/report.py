"""Bound reports: every Stein-type bound of a functional side by side."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

from chaoslab.bounds.d2 import chaos_sampler, cosine_dictionary, d2_lower_estimate, gaussian_sampler
from chaoslab.bounds.stein import covariance_operator, improved_bounds, msbc_bound, second_order_bounds
from chaoslab.chaos.functional import ChaosFunctional
from chaoslab.chaos.sampling import stream_rng
from chaoslab.core.operators import KOperator

logger = logging.getLogger(__name__)


@dataclass
class BoundReport:
    """Right-hand sides of the Stein bounds next to a d₂ lower estimate."""

    msbc: float
    msbc_triangle: dict = field(default_factory=dict)
    thm1: float = 0.0
    thm2: float = 0.0
    d2_lower: float = 0.0
    d2_lower_stderr: float = 0.0
    msbc_stderr: float = 0.0
    mb1: Optional[float] = None
    mb2: Optional[float] = None
    per_draw_ordered: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "BoundReport":
        return cls(**data)

    @property
    def combined_stderr(self) -> float:
        return math.sqrt(self.d2_lower_stderr ** 2 + self.msbc_stderr ** 2)

    def violations(self, z_gate: float = 3.0) -> list[str]:
        """Names of the report invariants that fail."""
        failed = []
        values = [self.msbc, self.thm1, self.thm2, self.d2_lower, self.d2_lower_stderr]
        values += list(self.msbc_triangle.values())
        if any(v < 0 for v in values):
            failed.append("nonnegative")
        if not self.per_draw_ordered or self.thm1 > self.thm2 * (1 + 1e-10) + 1e-15:
            failed.append("thm1<=thm2")
        if self.d2_lower > self.msbc + z_gate * self.combined_stderr:
            failed.append("d2_lower<=msbc")
        if self.msbc_triangle:
            split = self.msbc_triangle["gamma_term"] + self.msbc_triangle["cov_gap"]
            if self.msbc > split * (1 + 1e-10) + 1e-12:
                failed.append("msbc<=gamma_term+cov_gap")
        if self.mb1 is not None and self.mb2 is not None and self.mb2 > self.mb1 * (1 + 1e-10) + 1e-15:
            failed.append("mb2<=mb1")
        return failed


def evaluate_bounds(
    F: ChaosFunctional,
    S_Z: KOperator | None = None,
    n_mc: int = 10_000,
    dictionary_size: int = 128,
    seed: int = 0,
    tag: str = "bounds",
    block_size: int | None = None,
    threads: int | str | None = 1,
) -> BoundReport:
    """Evaluate every bound for a centered functional against ``N(0, S_Z)``.

    ``S_Z`` defaults to ``S_F``.
    """
    target = covariance_operator(F) if S_Z is None else S_Z
    msbc = msbc_bound(F, target, n_mc, seed, block_size, threads)
    second = second_order_bounds(F, n_mc, seed, block_size, threads)
    improved = improved_bounds(F, n_mc, seed, block_size, threads)
    dictionary = cosine_dictionary(F.spec.p, stream_rng(seed, f"{tag}.dictionary"), dictionary_size)
    lower = d2_lower_estimate(
        chaos_sampler(F), gaussian_sampler(target), dictionary, n_mc,
        seed=seed, tag=f"{tag}.d2", block_size=block_size, threads=threads,
    )
    report = BoundReport(
        msbc=msbc.msbc,
        msbc_triangle={"gamma_term": msbc.gamma_term, "cov_gap": msbc.cov_gap},
        thm1=second.thm1,
        thm2=second.thm2,
        d2_lower=lower.value,
        d2_lower_stderr=lower.stderr,
        msbc_stderr=msbc.msbc_stderr,
        mb1=improved.mb1 + msbc.cov_gap,
        mb2=improved.mb2 + msbc.cov_gap,
        per_draw_ordered=second.per_draw_ordered,
    )
    logger.debug("bound report: %s", report.to_dict())
    return report
