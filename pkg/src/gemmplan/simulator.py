"""Functional simulation of the tiled multiplication schedule.

Two independent executors produce the numeric result plus an exact count of
off-chip transfers and cycles:

* :func:`simulate_schedule` walks the full loop nest tile by tile: memory
  tiles over the output, the complete reduction dimension per tile, and the
  block/compute tile hierarchy inside each reduction step.  Within one
  reduction step every compute-tile position touches a disjoint slice of the
  output, so the step is evaluated as one array operation without changing
  any observable (values, transfer counts, cycle counts).
* :func:`simulate_pe_chain` executes the same schedule the way a linear
  chain of processing elements does: each element holds a double-buffered
  operand register, owns an interleaved share of the output tile, and the
  finished tile drains sequentially through the head of the chain.

Both return bit-identical results to :func:`reference_mmm` for integer types
(arithmetic wraps modulo 2**width) and agree within accumulation-order noise
for floating point; in fact the reduction order per output element is
ascending in k everywhere, so float results match the reference exactly too.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigurationError, InfeasibleConfigError, UnsupportedTypeError
from .hardware import DataTypeSpec, TileConfig, ceil_div, FLOAT, INTEGER
from .metrics import ProblemSize, accumulation_collision_safe

_FLOAT_DTYPES = {16: np.float16, 32: np.float32, 64: np.float64}


@dataclass(frozen=True)
class ElementType:
    """Numeric behaviour of one simulated scalar type."""

    kind: str
    width_bits: int

    def __post_init__(self):
        if self.kind == INTEGER:
            if not 1 <= self.width_bits <= 64:
                raise UnsupportedTypeError(
                    f"integer simulation supports 1..64 bits, got {self.width_bits}")
        elif self.kind == FLOAT:
            if self.width_bits not in _FLOAT_DTYPES:
                raise UnsupportedTypeError(
                    f"float simulation supports widths {sorted(_FLOAT_DTYPES)}, got {self.width_bits}")
        else:
            raise ConfigurationError(f"unknown element kind {self.kind!r}")

    @classmethod
    def from_spec(cls, dt: DataTypeSpec) -> "ElementType":
        return cls(dt.kind, dt.width_bits)

    @property
    def dtype(self):
        if self.kind == INTEGER:
            return np.uint64
        return _FLOAT_DTYPES[self.width_bits]

    @property
    def mask(self) -> int:
        if self.kind != INTEGER:
            raise ConfigurationError("mask only applies to integer types")
        return (1 << self.width_bits) - 1

    def normalize(self, data: np.ndarray) -> np.ndarray:
        """Coerce raw values into the type's representable range."""
        if self.kind == INTEGER:
            arr = np.asarray(data)
            if arr.dtype.kind == "f":
                raise ConfigurationError("cannot load float data into an integer buffer")
            arr = arr.astype(np.int64).astype(np.uint64) if arr.dtype.kind == "i" \
                else arr.astype(np.uint64)
            return arr & np.uint64(self.mask)
        return np.asarray(data).astype(self.dtype)


class MatrixBuffer:
    """Dense row-major matrix of one simulated element type.

    Integer payloads are stored in 64-bit containers and masked to width_bits
    on the way in; arithmetic wraps modulo 2**width_bits.
    """

    def __init__(self, data, etype: ElementType):
        arr = etype.normalize(np.asarray(data))
        if arr.ndim != 2:
            raise ConfigurationError(f"matrix data must be 2-D, got shape {arr.shape}")
        self.data = arr
        self.etype = etype

    @classmethod
    def zeros(cls, rows: int, cols: int, etype: ElementType) -> "MatrixBuffer":
        if rows < 1 or cols < 1:
            raise ConfigurationError("matrix extents must be positive")
        return cls(np.zeros((rows, cols), dtype=etype.dtype), etype)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def to_array(self) -> np.ndarray:
        return self.data.copy()

    def equals(self, other: "MatrixBuffer") -> bool:
        return self.etype == other.etype and np.array_equal(self.data, other.data)

    def __repr__(self) -> str:
        return f"MatrixBuffer({self.rows}x{self.cols}, {self.etype.kind}{self.etype.width_bits})"


@dataclass
class IoTrace:
    """Exact count of off-chip element transfers, one count per element moved.

    The padded_* fields isolate transfers that only exist because the matrix
    was zero-padded up to the tile grid; genuine traffic is the difference.
    """

    loads_a: int = 0
    loads_b: int = 0
    stores_c: int = 0
    padded_loads_a: int = 0
    padded_loads_b: int = 0
    padded_stores_c: int = 0
    access_log: Optional[List[Tuple]] = None
    burst_runs: Optional[List[int]] = None

    @property
    def total(self) -> int:
        return self.loads_a + self.loads_b + self.stores_c

    @property
    def padding_overhead(self) -> int:
        return self.padded_loads_a + self.padded_loads_b + self.padded_stores_c


@dataclass
class SimResult:
    c: MatrixBuffer
    io: IoTrace
    compute_cycles: int
    drain_cycles: int
    pipeline_safe: bool
    config: TileConfig
    padded_problem: Optional[ProblemSize] = None

    @property
    def efficiency(self) -> Fraction:
        """Compute cycles over total cycles, exact."""
        return Fraction(self.compute_cycles, self.compute_cycles + self.drain_cycles)


def _check_operands(p: ProblemSize, a: MatrixBuffer, b: MatrixBuffer, dt: DataTypeSpec) -> ElementType:
    etype = ElementType.from_spec(dt)
    if a.etype != etype or b.etype != etype:
        raise ConfigurationError(
            f"operand element types {a.etype}/{b.etype} do not match data type {dt.name!r}")
    if (a.rows, a.cols) != (p.m, p.k) or (b.rows, b.cols) != (p.k, p.n):
        raise ConfigurationError(
            f"operand shapes {a.rows}x{a.cols}, {b.rows}x{b.cols} do not match "
            f"problem m={p.m} n={p.n} k={p.k}")
    return etype


def reference_mmm(a: MatrixBuffer, b: MatrixBuffer) -> MatrixBuffer:
    """Oracle product: per output element, partial sums accumulate in ascending
    reduction order, each step rounded/wrapped in the target type."""
    if a.etype != b.etype:
        raise ConfigurationError("operands must share an element type")
    if a.cols != b.rows:
        raise ConfigurationError(f"inner dimensions differ: {a.cols} vs {b.rows}")
    etype = a.etype
    if etype.kind == INTEGER:
        # Wraparound arithmetic is associative, so a 64-bit matmul then a final
        # mask is exactly the per-step-masked triple loop.
        product = a.data @ b.data
        return MatrixBuffer(product & np.uint64(etype.mask), etype)
    c = np.zeros((a.rows, b.cols), dtype=etype.dtype)
    for kk in range(a.cols):
        c += a.data[:, kk:kk + 1] * b.data[kk:kk + 1, :]
    return MatrixBuffer(c, etype)


def _padded(arr: np.ndarray, rows: int, cols: int) -> np.ndarray:
    if arr.shape == (rows, cols):
        return arr.copy()
    out = np.zeros((rows, cols), dtype=arr.dtype)
    out[:arr.shape[0], :arr.shape[1]] = arr
    return out


def _tile_grid(p: ProblemSize, cfg: TileConfig, pad: bool) -> Tuple[int, int, int, int]:
    rows, cols = cfg.total_rows, cfg.total_cols
    if p.m % rows == 0 and p.n % cols == 0:
        return p.m, p.n, rows, cols
    if not pad:
        raise InfeasibleConfigError(
            f"memory tile {rows}x{cols} does not divide output {p.m}x{p.n}; "
            f"rerun with padding enabled to zero-fill the remainder")
    return ceil_div(p.m, rows) * rows, ceil_div(p.n, cols) * cols, rows, cols


def simulate_schedule(p: ProblemSize, cfg: TileConfig, a: MatrixBuffer, b: MatrixBuffer,
                      dt: DataTypeSpec, pad: bool = False,
                      record_log: bool = False) -> SimResult:
    """Execute the tiled schedule and count every off-chip element transfer.

    Per memory tile the full reduction dimension runs before the output tile
    is stored, so each A column segment and B row segment is loaded once per
    reduction step and every output element is stored exactly once.
    """
    etype = _check_operands(p, a, b, dt)
    m_p, n_p, rows, cols = _tile_grid(p, cfg, pad)
    a_data = _padded(a.data, m_p, p.k)
    b_data = _padded(b.data, p.k, n_p)
    accum_dtype = np.uint64 if etype.kind == INTEGER else etype.dtype
    c_data = np.zeros((m_p, n_p), dtype=accum_dtype)

    io = IoTrace(access_log=[] if record_log else None,
                 burst_runs=[] if record_log else None)
    positions = cfg.tiles_x * cfg.blocks_x * cfg.tiles_y * cfg.blocks_y
    compute_cycles = 0
    drain_cycles = 0

    for ti in range(m_p // rows):
        i0 = ti * rows
        live_rows = min(rows, max(0, p.m - i0))
        for tj in range(n_p // cols):
            j0 = tj * cols
            live_cols = min(cols, max(0, p.n - j0))
            for kk in range(p.k):
                a_seg = a_data[i0:i0 + rows, kk]
                b_seg = b_data[kk, j0:j0 + cols]
                io.loads_a += rows
                io.padded_loads_a += rows - live_rows
                io.loads_b += cols
                io.padded_loads_b += cols - live_cols
                if record_log:
                    io.access_log.extend(
                        ("A", ti, tj, kk, (i0 + r) * p.k + kk) for r in range(rows))
                    io.access_log.extend(
                        ("B", ti, tj, kk, kk * n_p + j0 + c) for c in range(cols))
                    io.burst_runs.extend(_segment_runs(
                        (i0 + r) * p.k + kk for r in range(rows)))
                c_data[i0:i0 + rows, j0:j0 + cols] += np.multiply(
                    a_seg[:, None], b_seg[None, :], dtype=accum_dtype)
                compute_cycles += positions
            io.stores_c += rows * cols
            io.padded_stores_c += rows * cols - live_rows * live_cols
            drain_cycles += rows * cols // cfg.units_y
            if record_log:
                io.access_log.extend(
                    ("C", ti, tj, None, (i0 + r) * n_p + j0 + c)
                    for r in range(rows) for c in range(cols))

    result = c_data[:p.m, :p.n]
    if etype.kind == INTEGER:
        result = result & np.uint64(etype.mask)
    padded_problem = ProblemSize(m_p, n_p, p.k) if (m_p, n_p) != (p.m, p.n) else None
    return SimResult(
        c=MatrixBuffer(result, etype),
        io=io,
        compute_cycles=compute_cycles,
        drain_cycles=drain_cycles,
        pipeline_safe=accumulation_collision_safe(cfg, dt),
        config=cfg,
        padded_problem=padded_problem,
    )


def simulate_pe_chain(p: ProblemSize, cfg: TileConfig, a: MatrixBuffer, b: MatrixBuffer,
                      dt: DataTypeSpec, pad: bool = False,
                      record_log: bool = False) -> SimResult:
    """Execute the schedule as a linear chain of processing elements.

    The chain needs units_x = 1 and pes_y = 1.  Element q of the chain keeps
    one double-buffered A register and owns every output row congruent to q
    modulo the chain length; operand values for the next row position shift
    through the chain while the current position computes, which is only
    collision-free when a block tile offers at least as many cycles as the
    chain has elements (tiles_x*tiles_y >= chain length).
    """
    if cfg.units_x != 1 or cfg.pes_y != 1:
        raise InfeasibleConfigError(
            f"chain execution requires units_x=1 and pes_y=1, got "
            f"units_x={cfg.units_x}, pes_y={cfg.pes_y}")
    pes = cfg.pes_x
    if cfg.tiles_x * cfg.tiles_y < pes:
        raise InfeasibleConfigError(
            f"chain refill starves: {cfg.tiles_x * cfg.tiles_y} compute tiles per "
            f"block tile is less than the {pes} chained elements")
    etype = _check_operands(p, a, b, dt)
    m_p, n_p, rows, cols = _tile_grid(p, cfg, pad)
    a_data = _padded(a.data, m_p, p.k)
    b_data = _padded(b.data, p.k, n_p)
    accum_dtype = np.uint64 if etype.kind == INTEGER else etype.dtype
    c_data = np.zeros((m_p, n_p), dtype=accum_dtype)

    io = IoTrace(access_log=[] if record_log else None,
                 burst_runs=[] if record_log else None)
    row_positions = rows // pes  # row groups per memory tile, one per chain pass
    compute_cycles = 0
    drain_cycles = 0

    for ti in range(m_p // rows):
        i0 = ti * rows
        live_rows = min(rows, max(0, p.m - i0))
        for tj in range(n_p // cols):
            j0 = tj * cols
            live_cols = min(cols, max(0, p.n - j0))
            # banks[q, r, :] is chain element q's share of the tile: row r*pes+q.
            banks = np.zeros((pes, row_positions, cols), dtype=accum_dtype)
            for kk in range(p.k):
                a_col = a_data[i0:i0 + rows, kk]
                b_seg = b_data[kk, j0:j0 + cols]
                io.loads_a += rows
                io.padded_loads_a += rows - live_rows
                io.loads_b += cols
                io.padded_loads_b += cols - live_cols
                if record_log:
                    io.access_log.extend(
                        ("A", ti, tj, kk, (i0 + r) * p.k + kk) for r in range(rows))
                    io.access_log.extend(
                        ("B", ti, tj, kk, kk * n_p + j0 + c) for c in range(cols))
                    io.burst_runs.extend(_segment_runs(
                        (i0 + r) * p.k + kk for r in range(rows)))
                a_next = a_col[0:pes]
                for r in range(row_positions):
                    a_current = a_next  # double-buffer swap
                    if r + 1 < row_positions:
                        a_next = a_col[(r + 1) * pes:(r + 2) * pes]
                    banks[:, r, :] += np.multiply(
                        a_current[:, None], b_seg[None, :], dtype=accum_dtype)
                    compute_cycles += cfg.tiles_y * cfg.blocks_y
            # Drain back through the head of the chain, element shares
            # interleaved so the store stream is contiguous rows of C.
            c_data[i0:i0 + rows, j0:j0 + cols] = \
                banks.transpose(1, 0, 2).reshape(rows, cols)
            io.stores_c += rows * cols
            io.padded_stores_c += rows * cols - live_rows * live_cols
            drain_cycles += rows * cols // cfg.units_y
            if record_log:
                io.access_log.extend(
                    ("C", ti, tj, None, (i0 + r) * n_p + j0 + c)
                    for r in range(rows) for c in range(cols))

    result = c_data[:p.m, :p.n]
    if etype.kind == INTEGER:
        result = result & np.uint64(etype.mask)
    padded_problem = ProblemSize(m_p, n_p, p.k) if (m_p, n_p) != (p.m, p.n) else None
    return SimResult(
        c=MatrixBuffer(result, etype),
        io=io,
        compute_cycles=compute_cycles,
        drain_cycles=drain_cycles,
        pipeline_safe=accumulation_collision_safe(cfg, dt),
        config=cfg,
        padded_problem=padded_problem,
    )


def _segment_runs(addresses) -> List[int]:
    """Contiguous-run lengths within one read transaction's address stream."""
    runs: List[int] = []
    prev = None
    for addr in addresses:
        if prev is not None and addr == prev + 1:
            runs[-1] += 1
        else:
            runs.append(1)
        prev = addr
    return runs


@dataclass(frozen=True)
class TransposeAccessStats:
    """Burst behaviour of reading A column-wise, with and without a
    transposition stage in front of the compute pipeline.

    Run-length histograms map run length -> number of runs.  The stage reads
    row vectors and parks them in one queue per vector lane; a queue must
    hold a full memory-tile column before it can be popped in transposed
    order, hence the depth requirement.
    """

    direct_runs: Dict[int, int]
    vectorized_runs: Dict[int, int]
    num_queues: int
    required_queue_depth: int

    @property
    def min_direct_run(self) -> int:
        return min(self.direct_runs)

    @property
    def min_vectorized_run(self) -> int:
        return min(self.vectorized_runs)


def transpose_access_analysis(p: ProblemSize, cfg: TileConfig, vector_width_elems: int,
                              queue_depth: Optional[int] = None) -> TransposeAccessStats:
    """Compare A-read burst lengths without and with the transposition stage.

    Without it, the schedule reads one column element at a time: runs of one
    word each (unless the storage row length is 1, where a column happens to
    be contiguous).  With it, A is fetched in row vectors of
    vector_width_elems contiguous elements, so every full read is one run of
    that length.
    """
    if vector_width_elems < 1:
        raise ConfigurationError("vector_width_elems must be >= 1")
    required = cfg.total_rows
    if queue_depth is None:
        queue_depth = required
    if queue_depth < required:
        raise ConfigurationError(
            f"transpose queues of depth {queue_depth} cannot hold a memory-tile "
            f"column of {required} elements")
    direct: Counter = Counter()
    vectorized: Counter = Counter()
    v = vector_width_elems
    for i0 in range(0, p.m, cfg.total_rows):
        height = min(cfg.total_rows, p.m - i0)
        if p.k == 1:
            direct[height] += 1
        else:
            direct[1] += height * p.k
        full, tail = divmod(p.k, v)
        if full:
            vectorized[v] += height * full
        if tail:
            vectorized[tail] += height
    return TransposeAccessStats(
        direct_runs=dict(direct),
        vectorized_runs=dict(vectorized),
        num_queues=v,
        required_queue_depth=required,
    )
