"""Tile-parameter selection: a greedy closed-form pick and a full sweep.

The greedy procedure mirrors how these kernels are sized by hand:

1. one row of units per processing element; as many columns as the widest
   routable bus allows,
2. as many processing elements as the logic budget, the memory-block stripe
   budget and (for the chain layout) the refill constraint admit,
3. the largest on-chip output tile the block budget allows, with block tiles
   sized to fill whole memory blocks and the tile shaped as close to square
   as the factorizations permit, since traffic is minimized by squareness.

If the widest column count cannot be completed into a fully feasible design
(block capacity in words can run out before logic does for narrow types),
the column count steps down and the later stages rerun.

The sweep enumerates every feasible configuration inside explicit bounds and
ranks them; the greedy pick always appears in the sweep by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .errors import ConfigurationError, InfeasibleConfigError
from .hardware import (
    DataTypeSpec,
    HardwareSpec,
    TileConfig,
    block_words,
    ceil_div,
)
from .metrics import DesignPoint, ProblemSize, evaluate_design

CHAIN = "1d"
GRID = "2d"


@dataclass(frozen=True)
class SearchBounds:
    """Limits on the search space plus fixed-value overrides.

    The chain layout pins units_x = 1 and pes_y = 1 regardless of the
    corresponding maxima.  Unset maxima default to whatever the hardware
    itself caps (bus width, logic budget, block budget).
    """

    layout: str = CHAIN
    frequency_hz: Optional[float] = None
    max_units_x: Optional[int] = None
    max_units_y: Optional[int] = None
    max_pes_x: Optional[int] = None
    max_pes_y: Optional[int] = None
    max_tiles_x: Optional[int] = None
    max_tiles_y: Optional[int] = None
    max_blocks_x: Optional[int] = None
    max_blocks_y: Optional[int] = None
    fixed_units_y: Optional[int] = None
    fixed_num_pes: Optional[int] = None

    def __post_init__(self):
        if self.layout not in (CHAIN, GRID):
            raise ConfigurationError(f"layout must be {CHAIN!r} or {GRID!r}, got {self.layout!r}")
        for name in ("max_units_x", "max_units_y", "max_pes_x", "max_pes_y",
                     "max_tiles_x", "max_tiles_y", "max_blocks_x", "max_blocks_y",
                     "fixed_units_y", "fixed_num_pes"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {value}")

    @property
    def chain(self) -> bool:
        return self.layout == CHAIN


@dataclass(frozen=True)
class RankedDesigns:
    """Feasible design points in deterministic best-first order.

    Ordering: peak ops/cycle, then computational intensity, then memory
    blocks put to use, then squareness of the tile, then the configuration
    tuple itself so equal-merit designs still sort stably.
    """

    points: Tuple[DesignPoint, ...]

    @classmethod
    def rank(cls, points: Iterable[DesignPoint]) -> "RankedDesigns":
        return cls(tuple(sorted(points, key=_rank_key)))

    @property
    def best(self) -> DesignPoint:
        if not self.points:
            raise InfeasibleConfigError("no feasible design points")
        return self.points[0]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, index: int) -> DesignPoint:
        return self.points[index]


def _rank_key(point: DesignPoint):
    # fifth key: at equal throughput, intensity, storage, and shape, wider
    # column groups write C back in fewer cycles, so they rank first
    return (-point.ops_per_cycle,
            -point.comp_intensity,
            -point.blocks_used,
            abs(point.tile_cols - point.tile_rows),
            -point.config.units_y,
            point.config.as_tuple())


def _divisors(n: int) -> List[int]:
    small, large = [], []
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            small.append(d)
            if d != n // d:
                large.append(n // d)
    return small + large[::-1]


def _pes_limits(hw: HardwareSpec, dt: DataTypeSpec, units_x: int, units_y: int,
                words_per_block: int, port_width: int, chain: bool) -> Dict[str, int]:
    """Upper bound on the number of processing elements, per constraint."""
    limits: Dict[str, int] = {}
    units = units_x * units_y
    for kind, budget in hw.resources.items():
        per_pe = dt.pe_overhead[kind] + dt.unit_cost[kind] * units
        if per_pe > 0:
            limits[f"resource:{kind}"] = budget // per_pe
    stripe = ceil_div(dt.width_bits * units, port_width)
    limits["memory_blocks"] = hw.memory_blocks // stripe
    if chain:
        limits["chain_depth"] = words_per_block
    return limits


def _split_candidates(units_y: int, pes_x: int, words_per_block: int,
                      block_tiles: int,
                      bounds: Optional[SearchBounds] = None) -> List[Tuple[int, int, int, int]]:
    """All (tiles_x, tiles_y, blocks_x, blocks_y) with the block tile filling
    whole memory blocks and every granted block put to use.

    Without tile bounds, the compute-tile grid fills each block exactly
    (tiles_x * tiles_y = words_per_block).  With a tile bound in play the
    grid instead fills as much of the block as the caps allow.
    """
    cap_tx = bounds.max_tiles_x if bounds else None
    cap_ty = bounds.max_tiles_y if bounds else None
    cap_bx = bounds.max_blocks_x if bounds else None
    cap_by = bounds.max_blocks_y if bounds else None
    if cap_tx is None and cap_ty is None:
        tile_pairs = [(tx, words_per_block // tx) for tx in _divisors(words_per_block)]
    else:
        top_x = min(cap_tx or words_per_block, words_per_block)
        tile_pairs = []
        for tiles_x in range(1, top_x + 1):
            tiles_y = min(cap_ty or words_per_block, words_per_block // tiles_x)
            if tiles_y >= 1:
                tile_pairs.append((tiles_x, tiles_y))
    out = []
    for tiles_x, tiles_y in tile_pairs:
        for blocks_x in _divisors(block_tiles):
            blocks_y = block_tiles // blocks_x
            if cap_bx is not None and blocks_x > cap_bx:
                continue
            if cap_by is not None and blocks_y > cap_by:
                continue
            out.append((tiles_x, tiles_y, blocks_x, blocks_y))
    return out


def _shape_key(units_y: int, pes_x: int, p: ProblemSize,
               split: Tuple[int, int, int, int]) -> Tuple:
    tiles_x, tiles_y, blocks_x, blocks_y = split
    rows = pes_x * tiles_x * blocks_x
    cols = units_y * tiles_y * blocks_y
    fits = rows <= p.m and cols <= p.n
    return (not fits, abs(cols - rows), split)


def explain_selection(hw: HardwareSpec, dt: DataTypeSpec, p: ProblemSize,
                      bounds: SearchBounds) -> Tuple[DesignPoint, List[str]]:
    """Greedy pick, plus one note per decision naming the binding constraint."""
    port_width, words_per_block = block_words(hw, dt)
    bus_cap = hw.max_bus_width_bits // dt.width_bits
    if bus_cap < 1:
        raise InfeasibleConfigError(
            f"one element of {dt.width_bits} bits exceeds the "
            f"{hw.max_bus_width_bits}-bit bus limit")
    top = min(bus_cap, bounds.max_units_y or bus_cap)
    if bounds.fixed_units_y is not None:
        if bounds.fixed_units_y > bus_cap:
            raise InfeasibleConfigError(
                f"fixed units_y={bounds.fixed_units_y} exceeds the bus limit of {bus_cap}")
        candidates = [bounds.fixed_units_y]
    else:
        candidates = list(range(top, 0, -1))

    last_failure = "no candidate column count"
    for units_y in candidates:
        limits = _pes_limits(hw, dt, 1, units_y, words_per_block, port_width, bounds.chain)
        if bounds.max_pes_x is not None:
            limits["bounds"] = bounds.max_pes_x
        binding = min(limits, key=lambda name: (limits[name], name))
        pes_x = limits[binding]
        if bounds.fixed_num_pes is not None:
            if bounds.fixed_num_pes > pes_x:
                last_failure = (f"fixed chain of {bounds.fixed_num_pes} elements exceeds "
                                f"the {binding} limit of {pes_x} at units_y={units_y}")
                continue
            pes_x = bounds.fixed_num_pes
            binding = "fixed_num_pes"
        if pes_x < 1:
            last_failure = f"{binding} admits no processing element at units_y={units_y}"
            continue
        stripe = pes_x * ceil_div(dt.width_bits * units_y, port_width)
        block_tiles = hw.memory_blocks // stripe
        splits = _split_candidates(units_y, pes_x, words_per_block, block_tiles, bounds)
        splits.sort(key=lambda s: _shape_key(units_y, pes_x, p, s))
        point = None
        for split in splits:
            tiles_x, tiles_y, blocks_x, blocks_y = split
            cfg = TileConfig(1, units_y, pes_x, 1, tiles_x, tiles_y, blocks_x, blocks_y)
            candidate = evaluate_design(cfg, hw, dt, p, bounds.frequency_hz,
                                        chain_layout=bounds.chain)
            if candidate.feasibility.ok:
                point = candidate
                break
            last_failure = (f"units_y={units_y}, pes={pes_x}: "
                            + "; ".join(c.detail for c in candidate.feasibility.failed()))
        if point is None:
            continue
        notes = [
            f"units: 1 row x {units_y} columns per element "
            f"({units_y * dt.width_bits} of {hw.max_bus_width_bits} bus bits"
            + (", fixed by request)" if bounds.fixed_units_y is not None else ")"),
            f"processing elements: {pes_x} (binding constraint: {binding})",
            f"memory tile: {point.tile_rows} x {point.tile_cols} elements in "
            f"{point.blocks_used} blocks of {words_per_block} words "
            f"({block_tiles} block tiles of {stripe} blocks)",
        ]
        return point, notes
    raise InfeasibleConfigError(f"no feasible configuration: {last_failure}")


def select_parameters(hw: HardwareSpec, dt: DataTypeSpec, p: ProblemSize,
                      bounds: SearchBounds) -> DesignPoint:
    """Greedy closed-form parameter selection; see the module docstring."""
    point, _ = explain_selection(hw, dt, p, bounds)
    return point


def sweep(hw: HardwareSpec, dt: DataTypeSpec, p: ProblemSize,
          bounds: SearchBounds) -> RankedDesigns:
    """Enumerate every feasible configuration inside the bounds, ranked."""
    port_width, words_per_block = block_words(hw, dt)
    bus_cap = hw.max_bus_width_bits // dt.width_bits
    if bus_cap < 1:
        return RankedDesigns(())
    uy_top = min(bus_cap, bounds.max_units_y or bus_cap)
    if bounds.chain:
        ux_top = 1
    else:
        ux_top = min(bus_cap, bounds.max_units_x or bus_cap)

    points = []
    for units_x in range(1, ux_top + 1):
        for units_y in range(1, uy_top + 1):
            if bounds.fixed_units_y is not None and units_y != bounds.fixed_units_y:
                continue
            limits = _pes_limits(hw, dt, units_x, units_y, words_per_block,
                                 port_width, bounds.chain)
            pes_cap = min(limits.values())
            if pes_cap < 1:
                continue
            px_top = min(pes_cap, bounds.max_pes_x or pes_cap)
            py_top = 1 if bounds.chain else min(pes_cap, bounds.max_pes_y or pes_cap)
            for pes_x in range(1, px_top + 1):
                for pes_y in range(1, py_top + 1):
                    num_pes = pes_x * pes_y
                    if num_pes > pes_cap:
                        break
                    if bounds.fixed_num_pes is not None and num_pes != bounds.fixed_num_pes:
                        continue
                    stripe = num_pes * ceil_div(
                        dt.width_bits * units_x * units_y, port_width)
                    block_tiles = hw.memory_blocks // stripe
                    if block_tiles < 1:
                        continue
                    for split in _split_candidates(units_y, pes_x, words_per_block,
                                                   block_tiles, bounds):
                        tiles_x, tiles_y, blocks_x, blocks_y = split
                        cfg = TileConfig(units_x, units_y, pes_x, pes_y,
                                         tiles_x, tiles_y, blocks_x, blocks_y)
                        point = evaluate_design(cfg, hw, dt, p, bounds.frequency_hz,
                                                chain_layout=bounds.chain)
                        if point.feasibility.ok:
                            points.append(point)
    return RankedDesigns.rank(points)
