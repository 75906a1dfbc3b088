"""Plot convergence rates as static SVG files using ``matplotlib``."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no date stamp, so identical data gives identical files
plt.rcParams["svg.hashsalt"] = "chaoslab"


def plot_rates(rates: dict, path: str | Path, title: str = "Rates") -> Path:
    """
    rates: dict with 'x_label', 'x' and 'series' (name -> values)
    Series with nonpositive values are drawn without a fitted slope.
    """
    path = Path(path)
    x = np.asarray(rates["x"], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, values in rates["series"].items():
        y = np.asarray(values, dtype=float)
        positive = y > 0
        label = name
        if positive.sum() >= 2:
            slope, intercept = np.polyfit(np.log(x[positive]), np.log(y[positive]), 1)
            label = f"{name} (slope {slope:.3f})"
            ax.plot(x[positive], np.exp(intercept) * x[positive] ** slope, ":", color="gray", linewidth=0.8)
        ax.plot(x[positive], y[positive], "o-", label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(rates["x_label"])
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
