import numpy as np

from chaoslab.bounds.report import BoundReport, evaluate_bounds
from chaoslab.chaos.functional import random_functional
from chaoslab.chaos.sampling import stream_rng
from chaoslab.core.tensors import HilbertSpec


def test_evaluate_bounds_on_random_functional():
    spec = HilbertSpec.euclidean(3, 2)
    F = random_functional(spec, 2, stream_rng(1, "report"))
    report = evaluate_bounds(F, n_mc=2000, dictionary_size=16, seed=3)
    assert report.violations() == []
    assert report.mb1 >= report.msbc_triangle["cov_gap"]
    assert BoundReport.from_dict(report.to_dict()) == report


def test_evaluate_bounds_is_deterministic():
    spec = HilbertSpec.euclidean(2, 1)
    F = random_functional(spec, 2, stream_rng(2, "report"))
    first = evaluate_bounds(F, n_mc=300, dictionary_size=8, seed=4, block_size=64, threads=1)
    second = evaluate_bounds(F, n_mc=300, dictionary_size=8, seed=4, block_size=64, threads=2)
    assert first == second


def test_violations_are_reported():
    report = BoundReport(msbc=0.1, msbc_triangle={"gamma_term": 0.01, "cov_gap": 0.0}, thm1=2.0, thm2=1.0,
                         d2_lower=1.0, d2_lower_stderr=0.01, mb1=0.5, mb2=0.7)
    assert set(report.violations()) == {"thm1<=thm2", "d2_lower<=msbc", "msbc<=gamma_term+cov_gap", "mb2<=mb1"}
    assert BoundReport(msbc=0.0, thm1=-1.0).violations() == ["nonnegative"]


def test_combined_stderr():
    report = BoundReport(msbc=1.0, d2_lower_stderr=3.0, msbc_stderr=4.0)
    assert np.isclose(report.combined_stderr, 5.0)
