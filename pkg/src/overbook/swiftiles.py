"""Sampled tile-size estimation for a target overbooking fraction.

Pipeline: density-based initial size, one-shot random tile sampling at that
size, quantile of the sampled occupancies, linear rescale so the quantile
lands on the buffer capacity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .matrix import SparseMatrix, density
from .tiling import (
    OccupancyDistribution,
    TileShape,
    grid_occupancies,
    partition,
    size_to_shape,
)


def _ceil(x: float) -> int:
    # guards against 10 / 0.1 style float noise
    return math.ceil(round(x, 9))


@dataclass(frozen=True)
class SwiftilesConfig:
    """``k`` positives expected above the ``y`` quantile.

    ``k=None`` samples every tile; ``k=0`` skips sampling and keeps the initial
    estimate. ``y=0`` samples every tile and scales on the maximum.
    """

    capacity: int
    y: float = 0.10
    k: Optional[int] = 10
    seed: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        if not 0.0 <= self.y <= 1.0:
            raise ValueError("y must lie in [0, 1]")
        if self.k is not None and self.k < 0:
            raise ValueError("k must be >= 0")

    @property
    def n_samples(self) -> Optional[int]:
        """Sample budget ceil(k / y); ``None`` means exhaustive."""
        if self.k is None or self.y == 0:
            return None
        return _ceil(self.k / self.y)


@dataclass
class SwiftilesResult:
    t_initial: int
    initial_shape: TileShape
    distribution: Optional[OccupancyDistribution]
    q_y: Optional[int]
    t_target: int
    shape: TileShape


def initial_estimate(capacity: int, s: float) -> int:
    """Tile size expected to hold ``capacity`` nonzeros at density ``s``."""
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    if s <= 0:
        raise ValueError("cannot estimate for empty tensor")
    if s > 1:
        raise ValueError("density must be <= 1")
    return max(1, round(capacity / s))


def sample_occupancies(m: SparseMatrix, shape: TileShape, n_samples: Optional[int],
                       seed: int = 0) -> OccupancyDistribution:
    """Occupancies of ``n_samples`` distinct uniformly chosen tiles.

    Falls back to every tile when the budget covers the grid (or is ``None``).
    """
    grid = partition(m, shape)
    total = len(grid)
    if n_samples is not None and n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if n_samples is None or n_samples >= total:
        return OccupancyDistribution(grid_occupancies(m, grid), grid.shape, exhaustive=True,
                                     tile_indices=np.arange(total))
    rng = np.random.default_rng(seed)
    idx = rng.choice(total, size=n_samples, replace=False)
    counts = kernels.window_counts(m.row_starts, m.col_indices, *grid.windows(idx))
    return OccupancyDistribution(counts, grid.shape, exhaustive=False, tile_indices=idx)


def quantile_qy(dist: OccupancyDistribution, y: float) -> int:
    """Value at descending rank ceil(y * n); at most a ``y`` fraction of samples exceed it.

    ``y=0`` gives the maximum.
    """
    n = len(dist)
    if n == 0:
        raise ValueError("empty distribution")
    if not 0.0 <= y <= 1.0:
        raise ValueError("y must lie in [0, 1]")
    rank = min(n, max(1, _ceil(y * n)))
    desc = np.sort(dist.samples)[::-1]
    return int(desc[rank - 1])


def scale_tile_size(t_initial: int, capacity: int, q_y: int) -> int:
    return max(1, round(t_initial * capacity / q_y))


def estimate_tile_size(m: SparseMatrix, cfg: SwiftilesConfig, role: str = "A") -> SwiftilesResult:
    full = m.rows * m.cols
    if m.nnz == 0:
        raise ValueError("cannot estimate for empty tensor")
    t_initial = min(initial_estimate(cfg.capacity, density(m)), full)
    initial_shape = size_to_shape(t_initial, m.shape, role)
    if cfg.k == 0:
        return SwiftilesResult(t_initial, initial_shape, None, None, t_initial, initial_shape)
    dist = sample_occupancies(m, initial_shape, cfg.n_samples, cfg.seed)
    q_y = quantile_qy(dist, cfg.y)
    if q_y == 0:
        t_target = full
    else:
        t_target = min(max(scale_tile_size(t_initial, cfg.capacity, q_y), cfg.capacity), full)
    return SwiftilesResult(t_initial, initial_shape, dist, q_y, t_target,
                           size_to_shape(t_target, m.shape, role))
