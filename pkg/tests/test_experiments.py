import math

import pytest

from overbook import experiments as ex
from overbook.generate import GeneratorSpec, generate


def test_geometric_mean():
    assert ex.geometric_mean([1, 4]) == pytest.approx(2.0)
    assert ex.geometric_mean([3]) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        ex.geometric_mean([])
    with pytest.raises(ValueError):
        ex.geometric_mean([1, 0])


def test_corpora_shapes():
    assert len(ex.ACCURACY_CORPUS) >= 8
    assert {s.kind for s in ex.ACCURACY_CORPUS} == {"uniform-random", "banded", "power-law-rows"}
    assert all(s.rows * s.cols >= 10**6 for s in ex.ACCURACY_CORPUS)
    # the schedule needs full-K tiles for every strategy
    assert all(ex.TRAFFIC_CAPACITY >= s.cols for s in ex.TRAFFIC_CORPUS)


def test_fine_ladder():
    lad = ex.fine_ladder(16, 1000)
    assert lad[0] == 16 and lad[-1] == 1000
    assert len(lad) > len(range(4, 10))


def _small():
    return generate(GeneratorSpec("banded", 600, 600, half_width=6, in_band_density=0.5,
                                  off_band_density=0.002, band_segments=12, band_skew=1.0, seed=1))


def test_accuracy_study_shapes():
    res = ex.accuracy_study([_small()], capacity=64, seeds=range(3))
    assert res.rates.shape == (1, 3)
    assert 0.0 <= res.mean_rate <= 1.0
    assert set(res.to_dict()) == {"mean_rate", "mae", "mae_initial", "per_tensor_rate"}


def test_exhaustive_k_is_deterministic():
    m = _small()
    a = ex.accuracy_study([m], capacity=64, k=None, seeds=[0])
    b = ex.accuracy_study([m], capacity=64, k=None, seeds=[5])
    assert a.mae == b.mae


def test_y_sweep_and_comparison():
    w = ex.Workload.from_matrix("small", _small())
    ys = ex.y_sweep(w, capacity=600, ys=(0.1, 0.5), seeds=range(2))
    assert len(ys) == 2 and all(v > 0 for v in ys)
    rows = ex.strategy_comparison(w, capacity=600, seeds=range(2))
    assert len(rows) == 2
    assert rows[0]["uniform-shape"] == rows[1]["uniform-shape"]
    assert not math.isnan(rows[0]["swiftiles-overbook"])


def test_workload_caches_outputs():
    w = ex.Workload.from_matrix("small", _small())
    first = w.outputs
    assert w.outputs == first and w._outputs == first
