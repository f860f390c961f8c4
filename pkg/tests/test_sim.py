import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from overbook.generate import GeneratorSpec, generate
from overbook.matrix import dense, from_coo, identity, transpose
from overbook.sim import (
    SimConfig,
    SimReport,
    build_schedule,
    effectual_multiplies,
    intersect_count,
    reuse_vs_bumped,
    simulate,
)
from overbook.tiling import TileShape, partition

from conftest import random_matrix, sparse_matrices


def triple_loop(A, B):
    a, b = A.to_dense() != 0, B.to_dense() != 0
    n = 0
    for i in range(A.rows):
        for j in range(B.cols):
            for k in range(A.cols):
                n += int(a[i, k] and b[k, j])
    return n


@pytest.mark.parametrize("idiom, traffic", [("tailor", 10), ("buffet", 12)])
def test_single_tile_scanned_twice(idiom, traffic):
    # one A tile of 6 elements, two partner B tiles: A is traversed twice
    A, B = dense(1, 6), dense(6, 2)
    cfg = SimConfig(capacity=4, fifo_size=2, idiom=idiom, shape_a=TileShape(1, 6), shape_b=TileShape(6, 1))
    r = simulate(A, B, cfg)
    assert r.traffic_a == traffic
    assert r.first_fetch + r.refetch == r.parent_traffic


def test_everything_fits():
    A = identity(32)
    r = simulate(A, transpose(A), SimConfig(capacity=64, strategy="uniform-shape"))
    assert r.bumped_fraction == 0.0
    assert r.reuse == 1.0
    assert r.refetch == 0
    assert r.parent_traffic == r.first_fetch


def test_schedule_shapes():
    A, B = dense(4, 4), dense(4, 6)
    assert build_schedule(A, B, TileShape(4, 4), TileShape(4, 2)) == [(0, 0), (0, 1), (0, 2)]
    pairs = build_schedule(A, B, TileShape(2, 4), TileShape(4, 3))
    assert pairs == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_schedule_keeps_empty_tiles():
    A = from_coo(4, 4, [0], [0])
    assert len(build_schedule(A, dense(4, 4), TileShape(2, 4), TileShape(4, 4))) == 2


@pytest.mark.parametrize("sa, sb", [(TileShape(2, 2), TileShape(4, 4)), (TileShape(2, 4), TileShape(2, 4))])
def test_schedule_rejects_k_mismatch(sa, sb):
    with pytest.raises(ValueError):
        build_schedule(dense(4, 4), dense(4, 4), sa, sb)


def test_schedule_rejects_inner_mismatch():
    with pytest.raises(ValueError):
        build_schedule(dense(4, 3), dense(4, 4), TileShape(1, 3), TileShape(4, 1))


def test_intersect_count():
    assert intersect_count(dense(3, 4), dense(4, 5), (0, 3, 0, 4), (0, 4, 0, 5)) == 60
    A = from_coo(2, 4, [0, 1], [0, 1])
    B = from_coo(4, 2, [2, 3], [0, 1])
    assert intersect_count(A, B, (0, 2, 0, 4), (0, 4, 0, 2)) == 0
    with pytest.raises(ValueError):
        intersect_count(A, B, (0, 2, 0, 2), (0, 4, 0, 2))


def test_intersect_six(six):
    t = transpose(six)
    assert intersect_count(six, t, (0, 6, 0, 6), (0, 6, 0, 6)) == triple_loop(six, t)


@given(sparse_matrices(max_dim=12))
@settings(max_examples=50, deadline=None)
def test_intersect_sum_over_pairs(m):
    t = transpose(m)
    sa, sb = TileShape(3, m.cols), TileShape(m.cols, 4)
    ga, gb = partition(m, sa), partition(t, sb)
    total = sum(intersect_count(m, t, ga.window(a), gb.window(b)) for a, b in build_schedule(m, t, sa, sb))
    assert total == effectual_multiplies(m, t) == triple_loop(m, t)


def _pair(seed, n=96, density=0.06):
    A = random_matrix(np.random.default_rng(seed), n, n, density)
    return A, transpose(A)


@pytest.mark.parametrize("strategy", ["uniform-shape", "prescient", "swiftiles-overbook"])
@pytest.mark.parametrize("idiom", ["tailor", "buffet"])
def test_report_invariants(strategy, idiom):
    A, B = _pair(1)
    r = simulate(A, B, SimConfig(capacity=32, strategy=strategy, idiom=idiom, y=0.2))
    assert r.parent_traffic == r.first_fetch + r.refetch
    assert r.traffic_a + r.traffic_b == r.parent_traffic
    for f in (r.reuse, r.reuse_a, r.reuse_b, r.bumped_fraction):
        assert 0.0 <= f <= 1.0
    assert r.effectual_multiplies == effectual_multiplies(A, B)
    assert r.cycles > 0 and r.energy > 0
    if strategy == "prescient":
        assert r.overbooking_rate == 0.0


@given(st.integers(0, 200), st.floats(0.05, 0.6))
@settings(max_examples=25, deadline=None)
def test_tailor_never_worse_than_buffet(seed, y):
    A, B = _pair(seed, 64, 0.08)
    t = simulate(A, B, SimConfig(capacity=24, idiom="tailor", y=y, seed=seed))
    b = simulate(A, B, SimConfig(capacity=24, idiom="buffet", y=y, seed=seed))
    assert t.parent_traffic <= b.parent_traffic
    if t.overbooking_rate == 0:
        assert t.parent_traffic == b.parent_traffic


def test_overbook_beats_uniform_on_banded():
    A = generate(GeneratorSpec("banded", 1024, 1024, half_width=20, in_band_density=0.5,
                               off_band_density=0.001, band_segments=32, band_skew=1.0, seed=3))
    B = transpose(A)
    uni = simulate(A, B, SimConfig(capacity=1024, strategy="uniform-shape"))
    ob = simulate(A, B, SimConfig(capacity=1024, strategy="swiftiles-overbook"))
    assert ob.parent_traffic < uni.parent_traffic


def test_reuse_vs_bumped_endpoints():
    A = identity(16)
    r = simulate(A, transpose(A), SimConfig(capacity=64))
    assert reuse_vs_bumped(r) == (0.0, 1.0)
    # buffet with tiles twice the buffer: every reread refetches
    A, B = dense(2, 16), dense(16, 4)
    r = simulate(A, B, SimConfig(capacity=8, idiom="buffet", shape_a=TileShape(1, 16),
                                 shape_b=TileShape(16, 1)))
    assert r.reuse_a == 0.0


def test_report_fields_and_dict():
    A, B = _pair(2, 48)
    r = simulate(A, B, SimConfig(capacity=32))
    d = r.to_dict()
    assert list(d) == SimReport.field_names()
    assert d["t_target_a"] is not None
    assert r.streaming_overhead == pytest.approx(r.refetch / r.first_fetch)


@pytest.mark.parametrize("kw", [
    dict(capacity=0), dict(strategy="lru"), dict(idiom="cache"), dict(bandwidth=0),
    dict(fifo_size=0), dict(rows_per_pass=0), dict(y=2.0),
])
def test_invalid_config(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)


def test_fifo_default_tracks_round_trip():
    cfg = SimConfig(capacity=4096)
    assert cfg.fifo == 100
    assert SimConfig(capacity=16).fifo == 16
