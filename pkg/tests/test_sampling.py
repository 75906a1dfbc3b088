import numpy as np
import pytest

from chaoslab.chaos.sampling import GaussianDraw, mehler_coupled_draw, monte_carlo_blocks, stream_rng
from chaoslab.utils.error_handling import DomainError
from chaoslab.utils.parallel import ordered_sum


def test_stream_rng_is_keyed_by_tag_and_block():
    a = stream_rng(11, "x", 0).standard_normal(4)
    assert np.array_equal(a, stream_rng(11, "x", 0).standard_normal(4))
    assert not np.array_equal(a, stream_rng(11, "x", 1).standard_normal(4))
    assert not np.array_equal(a, stream_rng(11, "y", 0).standard_normal(4))
    assert not np.array_equal(a, stream_rng(12, "x", 0).standard_normal(4))


def test_gaussian_draw_shapes():
    single = GaussianDraw.sample(3, stream_rng(0, "draw"))
    assert single.m == 3 and single.batch.shape == (1, 3)
    batch = GaussianDraw.sample(3, stream_rng(0, "draw"), n=5)
    assert batch.g.shape == (5, 3)
    with pytest.raises(DomainError):
        GaussianDraw(np.zeros((2, 2, 2)))


def test_mehler_coupling_endpoints():
    draw = GaussianDraw(np.array([1.0, -2.0]))
    fresh = np.array([0.5, 0.5])
    assert np.allclose(mehler_coupled_draw(draw, fresh, 0.0).g, draw.g)
    far = mehler_coupled_draw(draw, fresh, 50.0)
    assert np.allclose(far.g, fresh)
    assert far.seed_path == ("mehler", 50.0)


def test_mehler_coupling_errors():
    draw = GaussianDraw(np.zeros(2))
    with pytest.raises(DomainError):
        mehler_coupled_draw(draw, np.zeros(2), -0.1)
    with pytest.raises(DomainError):
        mehler_coupled_draw(draw, np.zeros(3), 0.1)


def test_mehler_coupling_keeps_unit_variance():
    draw = GaussianDraw.sample(1, stream_rng(3, "base"), n=20000)
    coupled = mehler_coupled_draw(draw, stream_rng(3, "fresh"), 0.4)
    assert coupled.g.var() == pytest.approx(1.0, abs=0.05)
    corr = np.corrcoef(draw.g[:, 0], coupled.g[:, 0])[0, 1]
    assert corr == pytest.approx(np.exp(-0.4), abs=0.03)


def test_monte_carlo_blocks_independent_of_threads():
    def block(rng, index, n):
        return rng.standard_normal(n).sum()

    serial = ordered_sum(monte_carlo_blocks(block, 1000, 5, "sum", block_size=64, threads=1))
    threaded = ordered_sum(monte_carlo_blocks(block, 1000, 5, "sum", block_size=64, threads=4))
    assert serial == threaded
