"""Fixed synthetic corpora and the studies run over them.

Two corpora:

* ``ACCURACY_CORPUS``: eight 20000 x 20000 tensors (uniform, banded, skewed
  banded, power-law rows) for tile-level estimator accuracy. Capacity 1024
  keeps roughly a hundred rows per tile, so the realized shape is not
  dominated by whole-row rounding.
* ``TRAFFIC_CORPUS``: four high-variance 4096 x 4096 tensors simulated with
  capacity 4096. Capacity >= K keeps every strategy's tiles spanning the
  full shared dimension, which the schedule requires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .generate import GeneratorSpec, generate
from .matrix import SparseMatrix, transpose
from .sim import SimConfig, output_nonzeros, simulate
from .swiftiles import SwiftilesConfig, estimate_tile_size
from .tiling import default_ladder, overbooking_rate

_N = 20000
ACCURACY_CAPACITY = 1024
ACCURACY_CORPUS = (
    GeneratorSpec("uniform-random", _N, _N, density=0.0005, seed=11),
    GeneratorSpec("uniform-random", _N, _N, density=0.002, seed=12),
    GeneratorSpec("banded", _N, _N, half_width=10, in_band_density=0.5, off_band_density=0.0001, seed=13),
    GeneratorSpec("banded", _N, _N, half_width=40, in_band_density=0.3, off_band_density=0.0002, seed=14),
    GeneratorSpec("banded", _N, _N, half_width=10, in_band_density=0.5, off_band_density=0.0001,
                  band_segments=400, band_skew=1.0, seed=15),
    GeneratorSpec("banded", _N, _N, half_width=20, in_band_density=0.5, off_band_density=0.0002,
                  band_segments=200, band_skew=1.5, seed=16),
    GeneratorSpec("power-law-rows", _N, _N, density=0.0005, exponent=0.8, seed=17),
    GeneratorSpec("power-law-rows", _N, _N, density=0.001, exponent=1.2, seed=18),
)

_M = 4096
TRAFFIC_CAPACITY = 4096
TRAFFIC_CORPUS = (
    GeneratorSpec("banded", _M, _M, half_width=81, in_band_density=0.5, off_band_density=0.001,
                  band_segments=128, band_skew=1.0, seed=15),
    GeneratorSpec("banded", _M, _M, half_width=163, in_band_density=0.25, off_band_density=0.001,
                  band_segments=64, band_skew=1.5, seed=16),
    GeneratorSpec("power-law-rows", _M, _M, density=0.01, exponent=0.8, seed=17),
    GeneratorSpec("power-law-rows", _M, _M, density=0.02, exponent=1.2, seed=18),
)
HIGH_VARIANCE_BANDED = TRAFFIC_CORPUS[0]

CORPORA = {"accuracy": ACCURACY_CORPUS, "traffic": TRAFFIC_CORPUS}

Y_SWEEP = (0.0, 0.02, 0.05, 0.10, 0.15, 0.22, 0.30, 0.40, 0.50, 0.75, 1.0)
K_SWEEP = (1, 5, 10, None)
LADDER_STEPS = 8  # prescient ladder resolution used by the traffic studies


def fine_ladder(capacity: int, full_size: int) -> tuple:
    return tuple(default_ladder(capacity, full_size, LADDER_STEPS))


@dataclass
class Workload:
    """An A x A^T problem with the product size cached."""

    name: str
    A: SparseMatrix
    B: SparseMatrix
    _outputs: Optional[int] = None

    @classmethod
    def from_matrix(cls, name: str, A: SparseMatrix, B: Optional[SparseMatrix] = None) -> "Workload":
        return cls(name, A, transpose(A) if B is None else B)

    @property
    def outputs(self) -> int:
        if self._outputs is None:
            self._outputs = output_nonzeros(self.A, self.B)
        return self._outputs

    def run(self, cfg: SimConfig):
        return simulate(self.A, self.B, cfg, output_elements=self.outputs)


def spec_name(spec: GeneratorSpec) -> str:
    return f"{spec.kind}-{spec.rows}x{spec.cols}-s{spec.seed}"


def load_corpus(specs: Iterable[GeneratorSpec]) -> list:
    return [generate(s) for s in specs]


# ------------------------------------------------------------- accuracy

@dataclass
class AccuracyResult:
    mean_rate: float
    mae: float
    mae_initial: float
    rates: np.ndarray  # shape (tensors, seeds)

    def to_dict(self) -> dict:
        return {"mean_rate": self.mean_rate, "mae": self.mae, "mae_initial": self.mae_initial,
                "per_tensor_rate": self.rates.mean(axis=1).tolist()}


def accuracy_study(mats: Sequence[SparseMatrix], capacity: int = ACCURACY_CAPACITY,
                   y: float = 0.10, k: Optional[int] = 10,
                   seeds: Sequence[int] = range(10)) -> AccuracyResult:
    """Realized overbooking rate of the scaled shape vs the target ``y``.

    The initial-shape baseline is deterministic, so it is measured once per tensor.
    """
    rates = np.zeros((len(mats), len(seeds)))
    init_err = []
    for i, m in enumerate(mats):
        res = None
        for j, seed in enumerate(seeds):
            res = estimate_tile_size(m, SwiftilesConfig(capacity, y, k, seed))
            rates[i, j] = overbooking_rate(m, res.shape, capacity)
        init_err.append(abs(overbooking_rate(m, res.initial_shape, capacity) - y))
    return AccuracyResult(float(rates.mean()), float(np.abs(rates - y).mean()),
                          float(np.mean(init_err)), rates)


def k_sweep(mats, capacity: int = ACCURACY_CAPACITY, y: float = 0.10,
            ks: Sequence[Optional[int]] = K_SWEEP, seeds=range(10)) -> dict:
    """MAE of the realized rate per sample-count setting (``None`` = every tile)."""
    return {k: accuracy_study(mats, capacity, y, k, seeds).mae for k in ks}


# ------------------------------------------------------------- traffic

def y_sweep(w: Workload, capacity: int = TRAFFIC_CAPACITY, ys: Sequence[float] = Y_SWEEP,
            seeds=range(5), ladder=None, **cfg) -> list:
    """Traffic-proxy speedup (prescient traffic / overbooked traffic) per ``y``,
    averaged over seeds."""
    if ladder is None:
        ladder = fine_ladder(capacity, w.A.rows * w.A.cols)
    base = w.run(SimConfig(capacity=capacity, strategy="prescient", ladder=ladder, **cfg))
    out = []
    for y in ys:
        ratios = [base.parent_traffic / w.run(SimConfig(capacity=capacity, y=y, seed=s, **cfg)).parent_traffic
                  for s in seeds]
        out.append(float(np.mean(ratios)))
    return out


def strategy_comparison(w: Workload, capacity: int = TRAFFIC_CAPACITY, seeds=range(10),
                        ladder=None, **cfg) -> list[dict]:
    """Parent traffic of the three strategies, one record per seed."""
    if ladder is None:
        ladder = fine_ladder(capacity, w.A.rows * w.A.cols)
    uni = w.run(SimConfig(capacity=capacity, strategy="uniform-shape", **cfg)).parent_traffic
    pre = w.run(SimConfig(capacity=capacity, strategy="prescient", ladder=ladder, **cfg)).parent_traffic
    rows = []
    for s in seeds:
        ob = w.run(SimConfig(capacity=capacity, strategy="swiftiles-overbook", seed=s, **cfg)).parent_traffic
        rows.append({"workload": w.name, "seed": s, "uniform-shape": uni, "prescient": pre,
                     "swiftiles-overbook": ob})
    return rows


def geometric_mean(xs: Iterable[float]) -> float:
    xs = [float(x) for x in xs]
    if not xs or min(xs) <= 0:
        raise ValueError("geometric mean needs positive values")
    return math.exp(sum(math.log(x) for x in xs) / len(xs))
