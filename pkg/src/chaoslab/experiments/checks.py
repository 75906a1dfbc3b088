"""Acceptance checks: exact identities and z-gated statistical comparisons."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, List

from scipy.stats import norm

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    """One acceptance check.

    ``margin`` is ``threshold - value`` for upper-bound checks, so a
    negative margin is a failure and its size says by how much.
    """

    name: str
    passed: bool
    value: float
    threshold: float
    kind: str = "exact"
    details: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.threshold - self.value

    def to_dict(self) -> dict:
        data = asdict(self)
        data["margin"] = self.margin
        data["verdict"] = "pass" if self.passed else "fail"
        return data


def family_z_gate(z: float, k: int) -> float:
    """Per-comparison gate for ``k`` comparisons at the family-wise level of one ``z`` gate.

    Šidák: ``α = 2(1 - Φ(z))``, ``α_k = 1 - (1 - α)^{1/k}``, gate ``Φ⁻¹(1 - α_k/2)``.
    """
    if k <= 1:
        return float(z)
    alpha = 2.0 * norm.sf(z)
    per_test = -math.expm1(math.log1p(-alpha) / k)
    return float(norm.isf(per_test / 2.0))


def at_most(name: str, value: float, threshold: float, kind: str = "exact", **details: Any) -> CheckResult:
    value, threshold = float(value), float(threshold)
    passed = bool(value <= threshold) and math.isfinite(value)
    return CheckResult(name, passed, value, threshold, kind, details)


def within_stderr(name: str, estimate: float, target: float, stderr: float, gate: float, **details: Any) -> CheckResult:
    """``|estimate - target| <= gate · stderr``."""
    deviation = abs(float(estimate) - float(target))
    details.update(estimate=float(estimate), target=float(target), stderr=float(stderr), gate=float(gate))
    return at_most(name, deviation, gate * float(stderr), kind="statistical", **details)


def nonincreasing(name: str, values: Iterable[float], rtol: float = 1e-12) -> CheckResult:
    values = [float(v) for v in values]
    worst = max((b - a * (1 + rtol) for a, b in zip(values, values[1:])), default=0.0)
    return at_most(name, worst, 0.0, values=values)


def failures(checks: List[CheckResult]) -> List[dict]:
    failed = [c.to_dict() for c in checks if not c.passed]
    for item in failed:
        logger.warning("check failed: %s (value %.6g, threshold %.6g)", item["name"], item["value"], item["threshold"])
    return failed
