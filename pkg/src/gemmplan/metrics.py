"""Closed-form performance and off-chip traffic models.

For C = A*B with A of shape m x k and B of shape k x n, the schedule streams
one column segment of A and one row segment of B per reduction step and keeps
a total_rows x total_cols tile of C resident on chip.  Everything a design
review needs falls out of a handful of exact expressions over the tile
extents; intensities are kept as `fractions.Fraction` so tests can assert
equality instead of chasing rounding noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

from .errors import ConfigurationError, InfeasibleConfigError
from .hardware import (
    ConstraintCheck,
    DataTypeSpec,
    FeasibilityReport,
    HardwareSpec,
    TileConfig,
    block_words,
    ceil_div,
    check_resource_feasibility,
    min_memory_blocks,
)


@dataclass(frozen=True)
class ProblemSize:
    """Dimensions of C = A*B: A is m x k, B is k x n, C is m x n."""

    m: int
    n: int
    k: int

    def __post_init__(self):
        for field in ("m", "n", "k"):
            value = getattr(self, field)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigurationError(f"{field} must be a positive integer, got {value!r}")

    @property
    def multiply_adds(self) -> int:
        return self.m * self.n * self.k


def execution_time(p: ProblemSize, num_units: int, frequency_hz: float) -> float:
    """Seconds to run the kernel at full throughput: one multiply-add per unit per cycle."""
    if num_units < 1:
        raise ConfigurationError("num_units must be >= 1")
    if frequency_hz <= 0:
        raise ConfigurationError("frequency_hz must be positive")
    return p.multiply_adds / (frequency_hz * num_units)


def tile_extents(cfg: TileConfig) -> Tuple[int, int]:
    """(rows, cols) of output kept on chip by one memory tile."""
    return cfg.total_rows, cfg.total_cols


def computational_intensity(tile_rows: int, tile_cols: int) -> Fraction:
    """Multiply-adds per element loaded, for one reduction step of one memory tile.

    Each step performs rows*cols updates and loads rows + cols elements.
    """
    if tile_rows < 1 or tile_cols < 1:
        raise ConfigurationError("tile extents must be positive")
    return Fraction(tile_rows * tile_cols, tile_rows + tile_cols)


def arithmetic_intensity(tile_rows: int, tile_cols: int, width_bits: int) -> Fraction:
    """Operations per byte: two ops per update, width_bits/8 bytes per element."""
    if width_bits < 1:
        raise ConfigurationError("width_bits must be >= 1")
    return 2 * computational_intensity(tile_rows, tile_cols) * Fraction(8, width_bits)


def io_volume(p: ProblemSize, tile_rows: int, tile_cols: int) -> int:
    """Total off-chip element transfers for the whole kernel.

    Every output element is stored exactly once; every memory tile reloads
    the A column segment and B row segment once per reduction step.
    """
    if tile_rows > p.m or tile_cols > p.n:
        raise InfeasibleConfigError(
            f"memory tile {tile_rows}x{tile_cols} exceeds output matrix {p.m}x{p.n}")
    num_tiles = ceil_div(p.m, tile_rows) * ceil_div(p.n, tile_cols)
    return p.m * p.n + num_tiles * p.k * (tile_rows + tile_cols)


def io_volume_estimate(p: ProblemSize, tile_rows: int, tile_cols: int) -> float:
    """Large-problem transfer estimate with partial edge tiles counted
    fractionally: m*n*(1 + k*(1/rows + 1/cols)).

    Agrees with :func:`io_volume` whenever the tile divides the matrix; use it
    for bandwidth projections where the tile grid need not align.
    """
    if tile_rows > p.m or tile_cols > p.n:
        raise InfeasibleConfigError(
            f"memory tile {tile_rows}x{tile_cols} exceeds output matrix {p.m}x{p.n}")
    return p.m * p.n * (1.0 + p.k * (1.0 / tile_rows + 1.0 / tile_cols))


def optimal_square_tile(capacity_words: int) -> Tuple[int, int]:
    """Tile shape minimizing traffic for a given on-chip capacity: the square."""
    if capacity_words < 1:
        raise ConfigurationError("capacity_words must be >= 1")
    side = math.isqrt(capacity_words)
    return side, side


def drain_efficiency(p: ProblemSize, cfg: TileConfig) -> Fraction:
    """Fraction of cycles spent computing rather than writing C back.

    Compute takes m*n*k/num_units cycles, the write-back m*n/units_y cycles
    (one column-group of width units_y per cycle, strictly after compute).
    For a linear chain (units_x = pes_y = 1) this collapses to k/(k + pes_x).
    """
    compute = Fraction(p.multiply_adds, cfg.num_units)
    drain = Fraction(p.m * p.n, cfg.units_y)
    return compute / (compute + drain)


def collision_distance(cfg: TileConfig) -> int:
    """Cycles between two accumulations into the same output address.

    The schedule walks every compute-tile position of the memory tile before
    revisiting one, so the distance is the position count.
    """
    return cfg.tiles_x * cfg.blocks_x * cfg.tiles_y * cfg.blocks_y


def accumulation_collision_safe(cfg: TileConfig, dt: DataTypeSpec) -> bool:
    """True when an in-flight accumulation always retires before its address recurs."""
    return collision_distance(cfg) >= dt.accumulation_latency


def peak_ops_per_cycle(cfg: TileConfig) -> int:
    """Multiply and add counted separately: two operations per unit per cycle."""
    return 2 * cfg.num_units


def average_bandwidth(io_elements: float, width_bits: int, seconds: float) -> float:
    """Mean off-chip traffic in bytes/second needed to finish in the given time."""
    if seconds <= 0:
        raise ConfigurationError("seconds must be positive")
    return io_elements * (width_bits / 8) / seconds


@dataclass(frozen=True)
class DesignPoint:
    """One fully evaluated tile configuration against one device and problem.

    `feasibility` aggregates the hardware mapping checks with the memory
    sizing checks; a point is only as good as the checks it passes, so the
    report is data, never an exception.
    """

    config: TileConfig
    problem: ProblemSize
    frequency_hz: float
    num_units: int
    num_pes: int
    port_width_bits: int
    words_per_block: int
    min_blocks: int
    usable_blocks: Optional[int]
    blocks_used: int
    on_chip_words: Optional[int]
    tile_rows: int
    tile_cols: int
    io_elements: Optional[int]
    comp_intensity: Fraction
    arith_intensity: Fraction
    ops_per_cycle: int
    time_seconds: float
    bandwidth_bytes_per_s: Optional[float]
    drain_fraction: Fraction
    pipeline_safe: bool
    feasibility: FeasibilityReport


def evaluate_design(cfg: TileConfig, hw: HardwareSpec, dt: DataTypeSpec, p: ProblemSize,
                    frequency_hz: Optional[float] = None,
                    chain_layout: bool = False) -> DesignPoint:
    """Derive every closed-form metric and constraint outcome for one configuration."""
    freq = hw.frequency_hz if frequency_hz is None else frequency_hz
    if freq <= 0:
        raise ConfigurationError("frequency_hz must be positive")
    if freq > hw.frequency_hz:
        raise ConfigurationError(
            f"requested clock {freq:.6g} Hz exceeds device rating {hw.frequency_hz:.6g} Hz")
    port_width, words_per_block = block_words(hw, dt)
    checks = list(check_resource_feasibility(cfg, hw, dt, chain_layout=chain_layout).checks)

    needed = min_memory_blocks(cfg, hw, dt)
    stripes = hw.memory_blocks // needed
    usable = stripes * needed if stripes >= 1 else None
    capacity = usable * words_per_block if usable is not None else None
    blocks_used = cfg.blocks_x * cfg.blocks_y * needed
    checks.append(ConstraintCheck(
        "block_allocation", stripes >= cfg.blocks_x * cfg.blocks_y,
        f"{cfg.blocks_x * cfg.blocks_y} block tiles of {needed} blocks vs {hw.memory_blocks} available"))
    checks.append(ConstraintCheck(
        "tile_capacity", cfg.tiles_x * cfg.tiles_y <= words_per_block,
        f"{cfg.tiles_x * cfg.tiles_y} compute tiles per block tile vs {words_per_block} words per block"))

    rows, cols = tile_extents(cfg)
    if capacity is not None:
        checks.append(ConstraintCheck(
            "memory_tile_product", rows * cols <= capacity,
            f"tile holds {rows * cols} elements vs {capacity} on-chip words"))
        checks.append(ConstraintCheck(
            "memory_tile_sum", rows + cols <= capacity,
            f"stream buffers need {rows + cols} words vs {capacity} on-chip words"))
    else:
        detail = f"no usable blocks: stripe of {needed} exceeds {hw.memory_blocks}"
        checks.append(ConstraintCheck("memory_tile_product", False, detail))
        checks.append(ConstraintCheck("memory_tile_sum", False, detail))
    fits = rows <= p.m and cols <= p.n
    checks.append(ConstraintCheck(
        "problem_fit", fits, f"tile {rows}x{cols} vs output {p.m}x{p.n}"))

    io_elems = io_volume(p, rows, cols) if fits else None
    seconds = execution_time(p, cfg.num_units, freq)
    bandwidth = (average_bandwidth(io_elems, dt.width_bits, seconds)
                 if io_elems is not None else None)
    return DesignPoint(
        config=cfg,
        problem=p,
        frequency_hz=freq,
        num_units=cfg.num_units,
        num_pes=cfg.num_pes,
        port_width_bits=port_width,
        words_per_block=words_per_block,
        min_blocks=needed,
        usable_blocks=usable,
        blocks_used=blocks_used,
        on_chip_words=capacity,
        tile_rows=rows,
        tile_cols=cols,
        io_elements=io_elems,
        comp_intensity=computational_intensity(rows, cols),
        arith_intensity=arithmetic_intensity(rows, cols, dt.width_bits),
        ops_per_cycle=peak_ops_per_cycle(cfg),
        time_seconds=seconds,
        bandwidth_bytes_per_s=bandwidth,
        drain_fraction=drain_efficiency(p, cfg),
        pipeline_safe=accumulation_collision_safe(cfg, dt),
        feasibility=FeasibilityReport(tuple(checks)),
    )
