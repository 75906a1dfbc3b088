"""Rate plots are written only when matplotlib is available."""

import pytest

pytest.importorskip("matplotlib")

from chaoslab.plugins.plot_rates import plot_rates  # noqa: E402


def test_plot_rates_is_repeatable(tmp_path):
    rates = {"x_label": "R", "x": [2.0, 4.0, 8.0], "series": {"d2_bound": [1.0, 0.5 ** 0.5, 0.5],
                                                              "d2_lower": [0.0, 0.0, 0.0]}}
    first = plot_rates(rates, tmp_path / "a.svg", title="spde")
    second = plot_rates(rates, tmp_path / "b.svg", title="spde")
    text = first.read_text(encoding="utf-8")
    assert "slope -0.500" in text
    assert text == second.read_text(encoding="utf-8")
