"""Tile overbooking for sparse tensor algebra: Tailor buffers, sampled tile
sizing and a tiled SpMSpM traffic simulator."""

from .buffers import Buffet, ContractViolation, Stall, Tailor
from .kernels import BACKEND
from .matrix import SparseMatrix, load_matrix_market, save_matrix_market
from .sim import SimConfig, SimReport, simulate
from .swiftiles import SwiftilesConfig, estimate_tile_size
from .tiling import TileShape, partition, prescient_tile_size

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Buffet",
    "ContractViolation",
    "SimConfig",
    "SimReport",
    "SparseMatrix",
    "Stall",
    "SwiftilesConfig",
    "Tailor",
    "TileShape",
    "estimate_tile_size",
    "load_matrix_market",
    "partition",
    "prescient_tile_size",
    "save_matrix_market",
    "simulate",
]
