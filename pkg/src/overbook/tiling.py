"""Coordinate-space tiling: uniform grids, occupancy measurement, shape policy
and the prescient (exhaustive worst-case) tile-size search."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .matrix import SparseMatrix

ROLES = ("A", "B")


@dataclass(frozen=True)
class TileShape:
    """Per-operand tile ranges. For operand A the columns are the shared K
    dimension; for operand B the rows are."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"tile ranges must be >= 1, got {self.rows}x{self.cols}")

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def k_range(self, role: str) -> int:
        return self.cols if role == "A" else self.rows

    def __str__(self):
        return f"{self.rows}x{self.cols}"


@dataclass(frozen=True)
class TileGrid:
    rows: int
    cols: int
    shape: TileShape

    @property
    def tile_rows(self) -> int:
        return -(-self.rows // self.shape.rows) if self.rows else 0

    @property
    def tile_cols(self) -> int:
        return -(-self.cols // self.shape.cols) if self.cols else 0

    def __len__(self) -> int:
        return self.tile_rows * self.tile_cols

    def window(self, index: int) -> tuple[int, int, int, int]:
        """``(row_lo, row_hi, col_lo, col_hi)`` of a tile, clipped at the matrix edge."""
        if not 0 <= index < len(self):
            raise IndexError(f"tile index {index} out of range for {len(self)} tiles")
        tr, tc = divmod(index, self.tile_cols)
        r0, c0 = tr * self.shape.rows, tc * self.shape.cols
        return r0, min(r0 + self.shape.rows, self.rows), c0, min(c0 + self.shape.cols, self.cols)

    def windows(self, indices) -> tuple[np.ndarray, ...]:
        idx = np.asarray(indices, dtype=np.int64)
        tr, tc = np.divmod(idx, self.tile_cols)
        r0, c0 = tr * self.shape.rows, tc * self.shape.cols
        return (r0, np.minimum(r0 + self.shape.rows, self.rows),
                c0, np.minimum(c0 + self.shape.cols, self.cols))


@dataclass
class OccupancyDistribution:
    samples: np.ndarray
    shape: TileShape
    exhaustive: bool
    tile_indices: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int64)
        if self.samples.size and self.samples.min() < 0:
            raise ValueError("occupancies must be non-negative")

    def __len__(self):
        return int(self.samples.size)

    @property
    def max(self) -> int:
        return int(self.samples.max()) if self.samples.size else 0

    def mean(self) -> float:
        return float(self.samples.mean()) if self.samples.size else 0.0

    def fraction_exceeding(self, capacity: int) -> float:
        if not self.samples.size:
            raise ValueError("empty distribution")
        return float(np.count_nonzero(self.samples > capacity)) / self.samples.size

    def histogram(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct occupancy values and how many tiles have each."""
        return np.unique(self.samples, return_counts=True)

    def cdf(self) -> tuple[np.ndarray, np.ndarray]:
        vals, counts = self.histogram()
        return vals, np.cumsum(counts) / self.samples.size


def partition(m: SparseMatrix, shape: TileShape) -> TileGrid:
    """Uniform grid over ``m``; ranges beyond the matrix clamp to one tile per axis."""
    shape = TileShape(min(shape.rows, max(m.rows, 1)), min(shape.cols, max(m.cols, 1)))
    return TileGrid(m.rows, m.cols, shape)


def tile_occupancy(m: SparseMatrix, grid: TileGrid, tile_index: int) -> int:
    r0, r1, c0, c1 = grid.window(tile_index)
    return int(kernels.window_counts(m.row_starts, m.col_indices, [r0], [r1], [c0], [c1])[0])


def grid_occupancies(m: SparseMatrix, grid: TileGrid) -> np.ndarray:
    if len(grid) == 0:
        return np.zeros(0, dtype=np.int64)
    return kernels.tile_counts(m.row_starts, m.col_indices, m.rows, m.cols,
                               grid.shape.rows, grid.shape.cols)


def occupancy_histogram(m: SparseMatrix, shape: TileShape) -> OccupancyDistribution:
    """Exhaustive distribution: one sample per tile of the grid."""
    grid = partition(m, shape)
    return OccupancyDistribution(grid_occupancies(m, grid), grid.shape, exhaustive=True)


def size_to_shape(target_size: int, dims: tuple[int, int], role: str,
                  shared_dim_extent: Optional[int] = None) -> TileShape:
    """K-first shape policy.

    The shared K range grows first (up to the K extent), the leftover factor
    goes to the operand's other dimension (M for A, N for B). Never exceeds
    ``target_size`` and never exceeds the operand; ``shared_dim_extent``
    optionally caps the K range further.
    """
    if role not in ROLES:
        raise ValueError(f"role must be one of {ROLES}")
    if target_size < 1:
        raise ValueError("target_size must be >= 1")
    rows, cols = dims
    k_ext, other_ext = (cols, rows) if role == "A" else (rows, cols)
    if shared_dim_extent is not None:
        if shared_dim_extent < 1:
            raise ValueError("shared_dim_extent must be >= 1")
        k_ext = min(k_ext, shared_dim_extent)
    k = max(1, min(target_size, k_ext))
    other = max(1, min(target_size // k, other_ext))
    return TileShape(other, k) if role == "A" else TileShape(k, other)


def overbooking_rate(m: SparseMatrix, shape: TileShape, capacity: int) -> float:
    """Fraction of all tiles (empty ones included) whose occupancy exceeds ``capacity``."""
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    return occupancy_histogram(m, shape).fraction_exceeding(capacity)


def default_ladder(capacity: int, full_size: int, steps_per_octave: int = 1) -> list[int]:
    """Capacity, 2x capacity, 4x ... and finally the whole operand.

    ``steps_per_octave > 1`` inserts geometrically spaced sizes between the
    powers of two for a finer prescient search.
    """
    if capacity < 1 or steps_per_octave < 1:
        raise ValueError("capacity and steps_per_octave must be >= 1")
    ladder = []
    i = 0
    while True:
        s = int(round(capacity * 2.0 ** (i / steps_per_octave)))
        if s >= full_size:
            break
        if not ladder or s > ladder[-1]:
            ladder.append(s)
        i += 1
    ladder.append(max(full_size, 1))
    return ladder


def prescient_tile_size(m: SparseMatrix, capacity: int, role: str = "A",
                        ladder: Optional[Sequence[int]] = None) -> TileShape:
    """Largest ladder size whose worst tile fits ``capacity`` (0% overbooking).

    Traverses the whole matrix once per ladder entry, which is the cost the
    sampled estimator avoids.
    """
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    if ladder is None:
        ladder = default_ladder(capacity, m.rows * m.cols)
    ladder = list(ladder)
    if not ladder:
        raise ValueError("ladder must be non-empty")
    if any(b < a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must be sorted ascending")
    best = None
    for size in ladder:
        shape = size_to_shape(size, m.shape, role)
        if occupancy_histogram(m, shape).max <= capacity:
            best = shape
    if best is None:
        raise ValueError(f"no ladder size fits capacity {capacity}")
    return best
