import numpy as np
import pytest
from hypothesis import given, strategies as st

from overbook.generate import GeneratorSpec, generate
from overbook.matrix import dense, empty
from overbook.swiftiles import (
    SwiftilesConfig,
    estimate_tile_size,
    initial_estimate,
    quantile_qy,
    sample_occupancies,
    scale_tile_size,
)
from overbook.tiling import OccupancyDistribution, TileShape, occupancy_histogram


@pytest.mark.parametrize("b, s, expect", [(8192, 0.001, 8_192_000), (100, 1.0, 100), (8, 0.5, 16)])
def test_initial_estimate(b, s, expect):
    assert initial_estimate(b, s) == expect


def test_initial_estimate_empty():
    with pytest.raises(ValueError, match="empty tensor"):
        initial_estimate(8, 0.0)
    with pytest.raises(ValueError, match="empty tensor"):
        estimate_tile_size(empty(4, 4), SwiftilesConfig(2))


def test_scale():
    assert scale_tile_size(1000, 8, 16) == 500


@pytest.mark.parametrize("k, y, n", [(10, 0.1, 100), (1, 0.1, 10), (10, 0.05, 200), (3, 0.3, 10)])
def test_sample_budget(k, y, n):
    assert SwiftilesConfig(8, y, k).n_samples == n


def _dist(values):
    v = np.asarray(values)
    return OccupancyDistribution(v, TileShape(1, 1), exhaustive=False, tile_indices=np.arange(v.size))


def test_quantile_examples():
    assert quantile_qy(_dist(range(1, 101)), 0.10) == 91
    assert quantile_qy(_dist([5] * 7), 0.3) == 5
    assert quantile_qy(_dist([9]), 0.5) == 9
    assert quantile_qy(_dist([3, 1, 2]), 0.0) == 3


@given(st.lists(st.integers(0, 1000), min_size=1, max_size=200), st.floats(0, 1))
def test_at_most_y_exceed_qy(values, y):
    q = quantile_qy(_dist(values), y)
    assert sum(v > q for v in values) <= y * len(values) + 1e-9
    assert q in values


def test_sampling_uniform_mean():
    m = generate(GeneratorSpec("uniform-random", 1000, 1000, density=0.01, seed=1))
    d = sample_occupancies(m, TileShape(100, 100), 100, seed=4)
    assert len(d) == 100
    assert abs(d.mean() - 100) < 10


def test_sampling_exhaustive_fallback():
    m = generate(GeneratorSpec("uniform-random", 60, 60, density=0.1, seed=2))
    d = sample_occupancies(m, TileShape(10, 10), 1000)
    assert d.exhaustive
    assert sorted(d.samples.tolist()) == sorted(occupancy_histogram(m, TileShape(10, 10)).samples.tolist())


def test_sampling_deterministic_and_distinct():
    m = generate(GeneratorSpec("uniform-random", 500, 500, density=0.02, seed=3))
    a = sample_occupancies(m, TileShape(10, 10), 100, seed=9)
    b = sample_occupancies(m, TileShape(10, 10), 100, seed=9)
    assert np.array_equal(a.tile_indices, b.tile_indices)
    assert len(set(a.tile_indices.tolist())) == 100


def test_dense_target_is_capacity():
    for y in (0.0, 0.1, 0.5, 1.0):
        res = estimate_tile_size(dense(64, 64), SwiftilesConfig(32, y, 10, 0))
        assert res.t_target == 32


def test_k_zero_keeps_initial():
    m = generate(GeneratorSpec("uniform-random", 200, 200, density=0.05, seed=5))
    res = estimate_tile_size(m, SwiftilesConfig(64, 0.1, 0))
    assert res.q_y is None and res.t_target == res.t_initial


def test_determinism():
    m = generate(GeneratorSpec("banded", 400, 400, half_width=8, in_band_density=0.5, seed=6))
    cfg = SwiftilesConfig(128, 0.1, 10, 3)
    a, b = estimate_tile_size(m, cfg), estimate_tile_size(m, cfg)
    assert (a.t_target, a.q_y, a.shape) == (b.t_target, b.q_y, b.shape)


@pytest.mark.parametrize("kw", [dict(capacity=0), dict(capacity=4, y=1.5), dict(capacity=4, k=-1)])
def test_invalid_config(kw):
    with pytest.raises(ValueError):
        SwiftilesConfig(**kw)
