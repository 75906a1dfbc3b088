"""Result files: per-experiment CSV, the JSON summary, the run manifest and plots.

CSV files hold floats at 17 significant digits with LF line endings, so two
runs with the same configuration produce byte-identical files.
"""

from __future__ import annotations

import datetime
import json
import logging
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Dict, List

import numpy as np
import pandas as pd

import chaoslab
from chaoslab.chaos.kernel_io import dump_functional
from chaoslab.experiments.config import ExperimentConfig
from chaoslab.experiments.runner import ExperimentResult
from chaoslab.plugins.plot_rates import plot_rates

logger = logging.getLogger(__name__)

SUMMARY_SCHEMA = 1
SUMMARY_FILE = "summary.json"
MANIFEST_FILE = "manifest.json"
TRACKED_PACKAGES = ("numpy", "scipy", "pandas", "joblib", "pydantic", "matplotlib")


def jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serialisable: {type(value).__name__}")


def _versions() -> Dict[str, str]:
    versions = {"chaoslab": chaoslab.__version__}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


@dataclass
class RunManifest:
    """What was run, with which settings, and which files it wrote."""

    config_hash: str
    seed: int
    threads: int
    timestamp: str
    versions: Dict[str, str] = field(default_factory=_versions)
    outputs: Dict[str, List[str]] = field(default_factory=dict)

    @classmethod
    def start(cls, config: ExperimentConfig, threads: int) -> "RunManifest":
        stamp = datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        return cls(config.config_hash(), config.seed, threads, stamp)

    def to_dict(self) -> dict:
        return asdict(self)


def write_csv(result: ExperimentResult, out_dir: Path) -> Path:
    path = out_dir / f"{result.name}.csv"
    frame = pd.DataFrame(result.rows)
    frame["verdict"] = result.row_verdicts()
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n", encoding="utf-8")
    return path


def write_experiment(result: ExperimentResult, out_dir: Path) -> List[str]:
    """CSV, optional rate plot and optional kernel snapshot of one experiment."""
    written = [write_csv(result, out_dir)]
    if result.rates:
        written.append(plot_rates(result.rates, out_dir / f"{result.name}_rates.svg", title=result.name))
    if result.snapshot is not None:
        written.append(dump_functional(result.snapshot, out_dir / f"{result.name}_kernel.txt"))
    for path in written:
        logger.info("wrote %s", path)
    return [p.name for p in written]


def write_summary(results: List[ExperimentResult], manifest: RunManifest, out_dir: Path) -> Path:
    payload = {
        "schema": SUMMARY_SCHEMA,
        "config_hash": manifest.config_hash,
        "seed": manifest.seed,
        "passed": all(r.passed for r in results),
        "experiments": {r.name: r.to_dict() for r in results},
    }
    path = out_dir / SUMMARY_FILE
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=jsonable) + "\n", encoding="utf-8")
    return path


def write_manifest(manifest: RunManifest, out_dir: Path) -> Path:
    path = out_dir / MANIFEST_FILE
    path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
