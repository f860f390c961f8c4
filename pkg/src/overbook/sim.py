"""Tiled SpMSpM traffic simulator over a parent store and two operand buffers.

Dataflow: A tiles are stationary (row-major over the A grid); for every A
tile all B tiles of the same K slab stream past it. Inside a tile pair the
compute array takes ``rows_per_pass`` nonempty A rows at a time and merges
them against the whole B tile in coordinate order, so a B load is scanned
ceil(nonempty A rows / rows_per_pass) times and the stationary A tile is
scanned once per partner B tile. Every read of a non-resident element is a
parent fetch. Tile pairs with an empty side do no work and fetch nothing.

``bumped_fraction`` is the bumped share of re-traversed data: each load is
weighted by its scans after the first, the same weight reuse is measured
with. The per-operand fields count every load once.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import kernels
from .matrix import SparseMatrix
from .swiftiles import SwiftilesConfig, estimate_tile_size
from .tiling import (
    TileShape,
    default_ladder,
    grid_occupancies,
    occupancy_histogram,
    partition,
    prescient_tile_size,
    size_to_shape,
)

STRATEGIES = ("uniform-shape", "prescient", "swiftiles-overbook")
IDIOMS = ("tailor", "buffet")


@dataclass(frozen=True)
class EnergyTable:
    parent_access: float = 100.0
    buffer_write: float = 2.0
    buffer_read: float = 1.0

    def __post_init__(self):
        if min(self.parent_access, self.buffer_write, self.buffer_read) < 0:
            raise ValueError("energy entries must be >= 0")


@dataclass(frozen=True)
class SimConfig:
    capacity: int = 256
    strategy: str = "swiftiles-overbook"
    idiom: str = "tailor"
    fifo_size: Optional[int] = None
    parent_latency: float = 50.0  # round-trip cycles, sizes the default FIFO region
    bandwidth: float = 2.0  # parent words per cycle
    compute_throughput: float = 16.0  # effectual multiplies per cycle
    words_per_nonzero: int = 2  # coordinate + value
    rows_per_pass: int = 16  # A rows held by the compute array per B traversal
    energy: EnergyTable = field(default_factory=EnergyTable)
    y: float = 0.10
    k: Optional[int] = 10
    seed: int = 0
    ladder: Optional[tuple] = None
    shape_a: Optional[TileShape] = None
    shape_b: Optional[TileShape] = None

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.idiom not in IDIOMS:
            raise ValueError(f"unknown idiom {self.idiom!r}; expected one of {IDIOMS}")
        if self.fifo_size is not None and not 1 <= self.fifo_size <= self.capacity:
            raise ValueError("fifo_size must lie in [1, capacity]")
        if self.bandwidth <= 0 or self.compute_throughput <= 0 or self.words_per_nonzero < 1:
            raise ValueError("bandwidth, compute throughput and words per nonzero must be positive")
        if self.rows_per_pass < 1:
            raise ValueError("rows_per_pass must be >= 1")
        if self.parent_latency < 0:
            raise ValueError("parent_latency must be >= 0")
        self.swiftiles()  # validates y and k

    @property
    def fifo(self) -> int:
        """FIFO region size: two parent round trips of elements (double buffered)."""
        if self.fifo_size is not None:
            return self.fifo_size
        f = math.ceil(2 * self.parent_latency * self.bandwidth / self.words_per_nonzero)
        return min(max(1, f), self.capacity)

    def swiftiles(self) -> SwiftilesConfig:
        return SwiftilesConfig(self.capacity, self.y, self.k, self.seed)


@dataclass
class SimReport:
    strategy: str
    idiom: str
    capacity: int
    fifo_size: int
    shape_a: str
    shape_b: str
    tiles_a: int
    tiles_b: int
    parent_traffic: int
    first_fetch: int
    refetch: int
    traffic_a: int
    traffic_b: int
    reads: int
    reuse_a: float
    reuse_b: float
    reuse: float
    bumped_fraction: float
    bumped_fraction_a: float
    bumped_fraction_b: float
    overbooking_rate: float
    overbooking_rate_a: float
    overbooking_rate_b: float
    output_elements: int
    effectual_multiplies: int
    cycles: float
    energy: float
    t_initial_a: Optional[int] = None
    q_y_a: Optional[int] = None
    t_target_a: Optional[int] = None
    t_initial_b: Optional[int] = None
    q_y_b: Optional[int] = None
    t_target_b: Optional[int] = None

    @classmethod
    def field_names(cls) -> list:
        return [f.name for f in fields(cls)]

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def streaming_overhead(self) -> float:
        """Refetched (bumped) traffic relative to first-fetch traffic."""
        return self.refetch / self.first_fetch if self.first_fetch else 0.0


# ------------------------------------------------------------------ schedule

def build_schedule(A: SparseMatrix, B: SparseMatrix, shape_a: TileShape,
                   shape_b: TileShape) -> list[tuple[int, int]]:
    """Ordered ``(a_tile, b_tile)`` pairs: A tiles row-major, each followed by
    every B tile of its K slab."""
    if A.cols != B.rows:
        raise ValueError(f"inner dimensions differ: {A.shape} x {B.shape}")
    ga, gb = partition(A, shape_a), partition(B, shape_b)
    if ga.shape.cols != gb.shape.rows:
        raise ValueError(f"K ranges differ: A tiles {ga.shape}, B tiles {gb.shape}")
    pairs = []
    for a in range(len(ga)):
        kb = a % ga.tile_cols
        for nb in range(gb.tile_cols):
            pairs.append((a, kb * gb.tile_cols + nb))
    return pairs


def intersect_count(A: SparseMatrix, B: SparseMatrix, window_a, window_b) -> int:
    """Effectual multiplies between an A window and a B window on the same K range."""
    ar0, ar1, ac0, ac1 = window_a
    br0, br1, bc0, bc1 = window_b
    if (ac0, ac1) != (br0, br1):
        raise ValueError("windows do not share the K range")
    if ac1 <= ac0:
        return 0
    # nonzeros per k inside the A window
    a_k = np.zeros(ac1 - ac0, dtype=np.int64)
    for r in range(ar0, ar1):
        row = A.row(r)
        lo, hi = np.searchsorted(row, [ac0, ac1])
        np.add.at(a_k, row[lo:hi] - ac0, 1)
    ks = np.flatnonzero(a_k)
    if ks.size == 0:
        return 0
    b_k = kernels.window_counts(B.row_starts, B.col_indices, ks + br0, ks + br0 + 1,
                                np.full(ks.size, bc0), np.full(ks.size, bc1))
    return int(np.dot(a_k[ks], b_k))


def effectual_multiplies(A: SparseMatrix, B: SparseMatrix) -> int:
    """Total multiplies of Z = A B: sum over k of nnz(A[:, k]) * nnz(B[k, :])."""
    col_a = np.bincount(A.col_indices, minlength=A.cols)
    row_b = np.diff(B.row_starts)
    return int(np.dot(col_a, row_b))


def output_nonzeros(A: SparseMatrix, B: SparseMatrix) -> int:
    a = sp.csr_matrix((np.ones(A.nnz, dtype=np.int64), A.col_indices, A.row_starts), shape=A.shape)
    b = sp.csr_matrix((np.ones(B.nnz, dtype=np.int64), B.col_indices, B.row_starts), shape=B.shape)
    return int((a @ b).nnz)


# ------------------------------------------------------------------ shapes

@dataclass
class ShapeChoice:
    shape_a: TileShape
    shape_b: TileShape
    swift_a: object = None
    swift_b: object = None


def _harmonize(A, B, shape_a: TileShape, shape_b: TileShape,
               size_a: int, size_b: int) -> tuple[TileShape, TileShape]:
    ka, kb = shape_a.cols, shape_b.rows
    if ka == kb:
        return shape_a, shape_b
    k = min(ka, kb)
    shape_a = TileShape(max(1, min(size_a // k, A.rows)), k)
    shape_b = TileShape(k, max(1, min(size_b // k, B.cols)))
    return shape_a, shape_b


def _fits(A, B, shape_a, shape_b, capacity) -> bool:
    return (occupancy_histogram(A, shape_a).max <= capacity
            and occupancy_histogram(B, shape_b).max <= capacity)


def _joint_prescient(A, B, capacity, ladder) -> tuple[TileShape, TileShape]:
    """Largest common ladder size at which both harmonized operands fit."""
    if ladder is None:
        ladder = default_ladder(capacity, max(A.rows * A.cols, B.rows * B.cols))
    best = None
    for size in ladder:
        sa, sb = size_to_shape(size, A.shape, "A"), size_to_shape(size, B.shape, "B")
        pair = _harmonize(A, B, sa, sb, size, size)
        if _fits(A, B, *pair, capacity):
            best = pair
    if best is None:
        raise ValueError(f"no ladder size fits capacity {capacity}")
    return best


def choose_shapes(A: SparseMatrix, B: SparseMatrix, cfg: SimConfig) -> ShapeChoice:
    if cfg.shape_a is not None and cfg.shape_b is not None:
        return ShapeChoice(cfg.shape_a, cfg.shape_b)
    c = cfg.capacity
    if cfg.strategy == "uniform-shape":
        # worst case: every tile dense, so size == capacity
        sa, sb = size_to_shape(c, A.shape, "A"), size_to_shape(c, B.shape, "B")
        return ShapeChoice(*_harmonize(A, B, sa, sb, c, c))
    if cfg.strategy == "prescient":
        sa = prescient_tile_size(A, c, "A", cfg.ladder)
        sb = prescient_tile_size(B, c, "B", cfg.ladder)
        pair = _harmonize(A, B, sa, sb, sa.size, sb.size)
        if pair != (sa, sb) and not _fits(A, B, *pair, c):
            pair = _joint_prescient(A, B, c, cfg.ladder)
        return ShapeChoice(*pair)
    swift = cfg.swiftiles()
    ra = estimate_tile_size(A, swift, "A")
    rb = estimate_tile_size(B, replace(swift, seed=swift.seed + 1), "B")
    sa, sb = _harmonize(A, B, ra.shape, rb.shape, ra.t_target, rb.t_target)
    return ShapeChoice(sa, sb, ra, rb)


# ------------------------------------------------------------------ engine

def _rows_per_tile(m: SparseMatrix, range_r: int, range_c: int, n_tc: int) -> np.ndarray:
    """Distinct nonempty rows inside every tile, row-major tile order."""
    keys = np.unique(m.row_indices() * n_tc + m.col_indices // range_c)
    tr, tc = np.divmod(keys, n_tc)
    n_tr = -(-m.rows // range_r)
    return np.bincount((tr // range_r) * n_tc + tc, minlength=n_tr * n_tc)


def simulate(A: SparseMatrix, B: SparseMatrix, cfg: SimConfig, *,
             output_elements: Optional[int] = None) -> SimReport:
    """Run one configuration. ``output_elements`` may carry a precomputed
    ``output_nonzeros(A, B)`` when the same operands are simulated repeatedly."""
    if A.cols != B.rows:
        raise ValueError(f"inner dimensions differ: {A.shape} x {B.shape}")
    choice = choose_shapes(A, B, cfg)
    ga, gb = partition(A, choice.shape_a), partition(B, choice.shape_b)
    if ga.shape.cols != gb.shape.rows:
        raise ValueError(f"K ranges differ: A tiles {ga.shape}, B tiles {gb.shape}")
    C, F = cfg.capacity, cfg.fifo
    tailor = cfg.idiom == "tailor"

    occ_a = grid_occupancies(A, ga).reshape(ga.tile_rows, ga.tile_cols)
    occ_b = grid_occupancies(B, gb).reshape(gb.tile_rows, gb.tile_cols)
    rows_a = _rows_per_tile(A, ga.shape.rows, ga.shape.cols, ga.tile_cols).reshape(occ_a.shape)

    # tiles with equal (occupancy, scans) behave identically, so replay once
    replay = lru_cache(maxsize=None)(lambda o, t: kernels.scan_replay(int(o), C, F, int(t), tailor))

    acc = Counter()

    def load(o, t, n, which):
        f, h, rr = replay(o, t)
        acc["fetch_" + which] += n * f
        acc["hits_" + which] += n * h
        acc["rr_" + which] += n * rr
        acc["first"] += n * o
        acc["reads"] += n * o * t
        acc["loaded_" + which] += n * o
        bumped = (o - (C - F) if tailor else o) if o > C else 0
        acc["bumped_" + which] += n * bumped
        # weighted by rereads, the same denominator reuse uses
        acc["loaded_rescan"] += n * o * (t - 1)
        acc["bumped_rescan"] += n * bumped * (t - 1)

    for kb in range(ga.tile_cols):
        b_occ = occ_b[kb]
        b_occ = b_occ[b_occ > 0]
        live = occ_a[:, kb] > 0
        if b_occ.size == 0 or not live.any():
            continue
        # the stationary A tile is scanned once per partner B tile
        for o, n in Counter(occ_a[live, kb].tolist()).items():
            load(o, b_occ.size, n, "a")
        # every A tile reloads each B tile of the slab and traverses it per row group
        passes = -(-rows_a[live, kb] // cfg.rows_per_pass)
        b_hist = Counter(b_occ.tolist())
        for t, n_a in Counter(passes.tolist()).items():
            for o, n_b in b_hist.items():
                load(o, t, n_a * n_b, "b")

    fetches = acc["fetch_a"] + acc["fetch_b"]
    mults = effectual_multiplies(A, B)
    outputs = output_nonzeros(A, B) if output_elements is None else int(output_elements)
    words = (fetches + outputs) * cfg.words_per_nonzero
    cycles = max(mults / cfg.compute_throughput, words / cfg.bandwidth)
    e = cfg.energy
    energy = (e.parent_access * (fetches + outputs) + e.buffer_write * fetches
              + e.buffer_read * acc["reads"])

    def ratio(h, r):
        return h / r if r else 1.0

    over_a = int(np.count_nonzero(occ_a > C))
    over_b = int(np.count_nonzero(occ_b > C))
    n_a, n_b = occ_a.size, occ_b.size
    sa, sb = choice.swift_a, choice.swift_b
    return SimReport(
        strategy=cfg.strategy,
        idiom=cfg.idiom,
        capacity=C,
        fifo_size=F,
        shape_a=str(ga.shape),
        shape_b=str(gb.shape),
        tiles_a=n_a,
        tiles_b=n_b,
        parent_traffic=fetches,
        first_fetch=acc["first"],
        refetch=fetches - acc["first"],
        traffic_a=acc["fetch_a"],
        traffic_b=acc["fetch_b"],
        reads=acc["reads"],
        reuse_a=ratio(acc["hits_a"], acc["rr_a"]),
        reuse_b=ratio(acc["hits_b"], acc["rr_b"]),
        reuse=ratio(acc["hits_a"] + acc["hits_b"], acc["rr_a"] + acc["rr_b"]),
        bumped_fraction=_frac(acc["bumped_rescan"], acc["loaded_rescan"]),
        bumped_fraction_a=_frac(acc["bumped_a"], acc["loaded_a"]),
        bumped_fraction_b=_frac(acc["bumped_b"], acc["loaded_b"]),
        overbooking_rate=(over_a + over_b) / (n_a + n_b) if n_a + n_b else 0.0,
        overbooking_rate_a=over_a / n_a if n_a else 0.0,
        overbooking_rate_b=over_b / n_b if n_b else 0.0,
        output_elements=outputs,
        effectual_multiplies=mults,
        cycles=cycles,
        energy=energy,
        t_initial_a=None if sa is None else sa.t_initial,
        q_y_a=None if sa is None else sa.q_y,
        t_target_a=None if sa is None else sa.t_target,
        t_initial_b=None if sb is None else sb.t_initial,
        q_y_b=None if sb is None else sb.q_y,
        t_target_b=None if sb is None else sb.t_target,
    )


def _frac(num, den) -> float:
    return num / den if den else 0.0


def reuse_vs_bumped(report: SimReport) -> tuple[float, float]:
    """``(bumped fraction, reuse fraction)`` of a finished run."""
    return report.bumped_fraction, report.reuse
