"""Seeded synthetic sparse matrices (uniform, banded, power-law row degrees)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .matrix import SparseMatrix, from_coo

KINDS = ("uniform-random", "banded", "power-law-rows")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    rows: int
    cols: int
    density: float = 0.01
    half_width: int = 0
    in_band_density: float = 1.0
    off_band_density: float = 0.0
    exponent: float = 1.0
    seed: int = 0
    # banded only: split the diagonal into contiguous segments whose in-band
    # density is scaled by permuted rank**-band_skew weights (mean 1)
    band_segments: int = 1
    band_skew: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        if self.rows < 0 or self.cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        for name in ("density", "in_band_density", "off_band_density"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.half_width < 0:
            raise ValueError("half_width must be non-negative")
        if self.exponent < 0:
            raise ValueError("exponent must be non-negative")
        if self.band_segments < 1:
            raise ValueError("band_segments must be >= 1")
        if self.band_skew < 0:
            raise ValueError("band_skew must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        return cls(**d)


def _distinct(rng: np.random.Generator, population: int, n: int) -> np.ndarray:
    """``n`` distinct integers from ``range(population)``, sorted."""
    if n <= 0:
        return np.zeros(0, dtype=np.int64)
    if n * 4 >= population:
        return np.sort(rng.choice(population, size=n, replace=False)).astype(np.int64)
    picked = np.unique(rng.integers(0, population, size=n + n // 8 + 16, dtype=np.int64))
    while picked.size < n:
        more = rng.integers(0, population, size=n - picked.size + 16, dtype=np.int64)
        picked = np.unique(np.concatenate([picked, more]))
    if picked.size > n:
        picked = np.sort(rng.choice(picked, size=n, replace=False))
    return picked


def _uniform(spec: GeneratorSpec, rng) -> SparseMatrix:
    total = spec.rows * spec.cols
    n = int(rng.binomial(total, spec.density)) if total else 0
    flat = _distinct(rng, total, n)
    return from_coo(spec.rows, spec.cols, flat // spec.cols, flat % spec.cols)


def _banded(spec: GeneratorSpec, rng) -> SparseMatrix:
    rows, cols, w = spec.rows, spec.cols, spec.half_width
    rr, cc = [], []
    seg_density = np.full(spec.band_segments, spec.in_band_density)
    if spec.band_skew > 0 and spec.band_segments > 1:
        weights = np.arange(1, spec.band_segments + 1, dtype=np.float64) ** -spec.band_skew
        weights = weights[rng.permutation(spec.band_segments)]
        seg_density = np.minimum(1.0, spec.in_band_density * weights / weights.mean())
    for i in range(rows):
        lo, hi = max(0, i - w), min(cols, i + w + 1)
        if hi <= lo:
            continue
        k = int(rng.binomial(hi - lo, seg_density[i * spec.band_segments // rows]))
        if k:
            rr.append(np.full(k, i, dtype=np.int64))
            cc.append(lo + _distinct(rng, hi - lo, k))
    total = rows * cols
    if spec.off_band_density > 0 and total:
        flat = _distinct(rng, total, int(rng.binomial(total, spec.off_band_density)))
        r, c = flat // cols, flat % cols
        keep = np.abs(r - c) > w
        rr.append(r[keep])
        cc.append(c[keep])
    if not rr:
        return from_coo(rows, cols, [], [])
    return from_coo(rows, cols, np.concatenate(rr), np.concatenate(cc))


def _power_law(spec: GeneratorSpec, rng) -> SparseMatrix:
    rows, cols = spec.rows, spec.cols
    if rows == 0 or cols == 0:
        return from_coo(rows, cols, [], [])
    weights = np.arange(1, rows + 1, dtype=np.float64) ** -spec.exponent
    weights = weights[rng.permutation(rows)]
    expected = weights / weights.sum() * spec.density * rows * cols
    # redistribute mass that would overflow a full row
    for _ in range(64):
        over = expected > cols
        if not over.any():
            break
        excess = (expected[over] - cols).sum()
        expected[over] = cols
        free = ~over & (expected < cols)
        if not free.any():
            break
        expected[free] += excess * expected[free] / expected[free].sum()
    p = np.clip(expected / cols, 0.0, 1.0)
    degrees = rng.binomial(cols, p)
    rr = np.repeat(np.arange(rows, dtype=np.int64), degrees)
    cc = np.concatenate([_distinct(rng, cols, int(d)) for d in degrees]) if rr.size else np.zeros(0, np.int64)
    return from_coo(rows, cols, rr, cc)


def expected_nnz(spec: GeneratorSpec) -> float:
    if spec.kind == "banded":
        # segment skew keeps the mean in-band density (up to clipping at 1)
        w = spec.half_width
        band = sum(max(0, min(spec.cols, i + w + 1) - max(0, i - w)) for i in range(spec.rows))
        return band * spec.in_band_density + (spec.rows * spec.cols - band) * spec.off_band_density
    return spec.rows * spec.cols * spec.density


def generate(spec: GeneratorSpec) -> SparseMatrix:
    """Deterministic for a fixed spec (numpy PCG64 seeded with ``spec.seed``)."""
    if expected_nnz(spec) > spec.rows * spec.cols:
        raise ValueError("expected nonzero count exceeds matrix size")
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "uniform-random":
        return _uniform(spec, rng)
    if spec.kind == "banded":
        return _banded(spec, rng)
    return _power_law(spec, rng)
