"""Declarative hardware description and resource-mapping arithmetic.

The device is described by a budget of named logic resources (lookup tables,
registers, multipliers, ...) plus a pool of fixed-size on-chip memory blocks
with a discrete set of port widths.  A kernel instance is described by a
:class:`TileConfig`: how many scalar compute units sit inside one processing
element, how many processing elements run in parallel, and how the on-chip
and off-chip tiling hierarchy is layered on top of them.

All functions here are closed-form integer arithmetic; nothing is simulated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Tuple, Union

from .errors import ConfigurationError, InfeasibleConfigError, UnsupportedTypeError

INTEGER = "integer"
FLOAT = "float"

_KINDS = (INTEGER, FLOAT)


class ResourceVector:
    """Ordered collection of (resource kind, amount) pairs.

    Kinds are free-form names ("LUT", "DSP", ...); amounts are non-negative
    integers.  Two vectors are only comparable when they describe the same
    kind set, which every consumer checks before doing arithmetic.
    """

    __slots__ = ("_entries",)

    def __init__(self, amounts: Union[Mapping[str, int], Iterable[Tuple[str, int]]]):
        if isinstance(amounts, Mapping):
            pairs = tuple(amounts.items())
        else:
            pairs = tuple(amounts)
        seen = set()
        for kind, amount in pairs:
            if not isinstance(kind, str) or not kind:
                raise ConfigurationError(f"resource kind must be a non-empty string, got {kind!r}")
            if kind in seen:
                raise ConfigurationError(f"duplicate resource kind {kind!r}")
            if not isinstance(amount, int) or isinstance(amount, bool) or amount < 0:
                raise ConfigurationError(f"resource amount for {kind!r} must be a non-negative integer, got {amount!r}")
            seen.add(kind)
        self._entries = pairs

    @classmethod
    def parse(cls, text: str) -> "ResourceVector":
        """Parse "KIND:amount, KIND:amount" notation."""
        pairs = []
        for chunk in text.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            kind, sep, amount = chunk.partition(":")
            if not sep:
                raise ConfigurationError(f"expected KIND:amount, got {chunk!r}")
            try:
                value = int(amount.strip())
            except ValueError as exc:
                raise ConfigurationError(f"bad amount for resource {kind.strip()!r}: {amount.strip()!r}") from exc
            pairs.append((kind.strip(), value))
        return cls(pairs)

    @classmethod
    def zeros(cls, kinds: Iterable[str]) -> "ResourceVector":
        return cls([(kind, 0) for kind in kinds])

    @property
    def kinds(self) -> Tuple[str, ...]:
        return tuple(kind for kind, _ in self._entries)

    def items(self) -> Tuple[Tuple[str, int], ...]:
        return self._entries

    def __getitem__(self, kind: str) -> int:
        for name, amount in self._entries:
            if name == kind:
                return amount
        raise KeyError(kind)

    def __contains__(self, kind: str) -> bool:
        return any(name == kind for name, _ in self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ResourceVector):
            return NotImplemented
        return set(self._entries) == set(other._entries)

    def __hash__(self) -> int:
        return hash(frozenset(self._entries))

    def __str__(self) -> str:
        return ", ".join(f"{kind}:{amount}" for kind, amount in self._entries)

    def __repr__(self) -> str:
        return f"ResourceVector({{{', '.join(f'{k!r}: {v}' for k, v in self._entries)}}})"


def _require_same_kinds(a: ResourceVector, b: ResourceVector, what: str) -> None:
    if set(a.kinds) != set(b.kinds):
        raise ConfigurationError(
            f"mismatched resource kinds for {what}: {sorted(a.kinds)} vs {sorted(b.kinds)}")


@dataclass(frozen=True)
class HardwareSpec:
    """Resource and memory budget of one target device.

    resources            total logic budget available to the kernel
    memory_blocks        number of on-chip memory blocks
    block_capacity_bits  capacity of a single memory block
    port_widths_bits     port widths a block can be configured to, ascending
    max_bus_width_bits   widest inter-module bus the fabric can route
    frequency_hz         highest clock the device is rated for
    """

    resources: ResourceVector
    memory_blocks: int
    block_capacity_bits: int
    port_widths_bits: Tuple[int, ...]
    max_bus_width_bits: int
    frequency_hz: float

    def __post_init__(self):
        if self.memory_blocks < 1:
            raise ConfigurationError("memory_blocks must be >= 1")
        if self.block_capacity_bits < 1:
            raise ConfigurationError("block_capacity_bits must be >= 1")
        widths = tuple(self.port_widths_bits)
        object.__setattr__(self, "port_widths_bits", widths)
        if not widths:
            raise ConfigurationError("port_widths_bits must not be empty")
        if any(w < 1 for w in widths) or list(widths) != sorted(set(widths)):
            raise ConfigurationError("port_widths_bits must be strictly ascending positive integers")
        for w in widths:
            if self.block_capacity_bits % w != 0:
                raise ConfigurationError(
                    f"block capacity {self.block_capacity_bits} bits is not divisible by port width {w}")
        if self.max_bus_width_bits < 1:
            raise ConfigurationError("max_bus_width_bits must be >= 1")
        if self.frequency_hz <= 0:
            raise ConfigurationError("frequency_hz must be positive")


@dataclass(frozen=True)
class DataTypeSpec:
    """Cost model of one scalar data type on a particular device.

    unit_cost             resources consumed by one scalar multiply-accumulate unit
    pe_overhead           resources consumed once per processing element
    accumulation_latency  pipeline depth of the accumulation loop, in cycles
    kind                  "integer" (exact, wraparound) or "float"
    """

    name: str
    width_bits: int
    unit_cost: ResourceVector
    pe_overhead: ResourceVector
    accumulation_latency: int
    kind: str

    def __post_init__(self):
        if not self.name:
            raise ConfigurationError("data type name must not be empty")
        if self.width_bits < 1:
            raise ConfigurationError("width_bits must be >= 1")
        if self.kind not in _KINDS:
            raise ConfigurationError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.accumulation_latency < 1:
            raise ConfigurationError("accumulation_latency must be >= 1")
        _require_same_kinds(self.unit_cost, self.pe_overhead, f"data type {self.name!r}")
        if all(amount == 0 for _, amount in self.unit_cost.items()):
            raise ConfigurationError(f"data type {self.name!r} must consume at least one resource per unit")


@dataclass(frozen=True)
class TileConfig:
    """Extents of the four-level tiling hierarchy, x = rows, y = columns.

    units_*   scalar compute units per processing element
    pes_*     processing elements per compute tile
    tiles_*   compute tiles per block tile
    blocks_*  block tiles per memory tile
    """

    units_x: int
    units_y: int
    pes_x: int
    pes_y: int
    tiles_x: int
    tiles_y: int
    blocks_x: int
    blocks_y: int

    def __post_init__(self):
        for field in ("units_x", "units_y", "pes_x", "pes_y",
                      "tiles_x", "tiles_y", "blocks_x", "blocks_y"):
            value = getattr(self, field)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigurationError(f"{field} must be a positive integer, got {value!r}")

    @property
    def num_units(self) -> int:
        """Parallel scalar units across the whole array (output elements per cycle)."""
        return self.units_x * self.units_y * self.pes_x * self.pes_y

    @property
    def num_pes(self) -> int:
        return self.pes_x * self.pes_y

    @property
    def total_rows(self) -> int:
        """Rows of output covered by one memory tile."""
        return self.units_x * self.pes_x * self.tiles_x * self.blocks_x

    @property
    def total_cols(self) -> int:
        """Columns of output covered by one memory tile."""
        return self.units_y * self.pes_y * self.tiles_y * self.blocks_y

    def as_tuple(self) -> Tuple[int, ...]:
        return (self.units_x, self.units_y, self.pes_x, self.pes_y,
                self.tiles_x, self.tiles_y, self.blocks_x, self.blocks_y)


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def max_compute_units(hw: HardwareSpec, dt: DataTypeSpec) -> int:
    """Upper bound on parallel scalar units from the logic budget alone.

    Takes the tightest per-kind quotient; kinds the unit does not consume
    impose no bound.
    """
    _require_same_kinds(hw.resources, dt.unit_cost, f"data type {dt.name!r} on hardware")
    bounds = [hw.resources[kind] // cost for kind, cost in dt.unit_cost.items() if cost > 0]
    return min(bounds)


def block_words(hw: HardwareSpec, dt: DataTypeSpec) -> Tuple[int, int]:
    """Pick the narrowest memory port that fits one element.

    Returns (port_width_bits, words_per_block).  A wider-than-necessary port
    wastes block capacity, so the smallest supported width >= the element
    width is always chosen.
    """
    for width in hw.port_widths_bits:
        if width >= dt.width_bits:
            return width, hw.block_capacity_bits // width
    raise UnsupportedTypeError(
        f"data type {dt.name!r} ({dt.width_bits} bits) is wider than every supported "
        f"memory port width {list(hw.port_widths_bits)}")


def min_memory_blocks(cfg: TileConfig, hw: HardwareSpec, dt: DataTypeSpec) -> int:
    """Fewest memory blocks that can serve every unit's access each cycle.

    All units inside a processing element read/write the same cycle, so their
    accesses coalesce into one word of units_x*units_y*width bits, striped
    across enough blocks to cover it; every processing element needs its own
    stripe.
    """
    port_width, _ = block_words(hw, dt)
    per_pe = ceil_div(dt.width_bits * cfg.units_x * cfg.units_y, port_width)
    return cfg.num_pes * per_pe


def usable_memory_blocks(cfg: TileConfig, hw: HardwareSpec, dt: DataTypeSpec) -> int:
    """Largest number of blocks that can actually be allocated.

    Blocks are only useful in whole stripes of min_memory_blocks, so the
    budget is rounded down to that granularity.
    """
    needed = min_memory_blocks(cfg, hw, dt)
    if needed > hw.memory_blocks:
        raise InfeasibleConfigError(
            f"config needs {needed} memory blocks for parallel access but only "
            f"{hw.memory_blocks} exist")
    return (hw.memory_blocks // needed) * needed


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of every named mapping constraint; never collapses to a bare bool."""

    checks: Tuple[ConstraintCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> Tuple[ConstraintCheck, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def __getitem__(self, name: str) -> ConstraintCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def __iter__(self):
        return iter(self.checks)

    def describe(self) -> str:
        lines = []
        for check in self.checks:
            status = "ok " if check.passed else "FAIL"
            lines.append(f"  [{status}] {check.name}: {check.detail}")
        return "\n".join(lines)


def check_resource_feasibility(cfg: TileConfig, hw: HardwareSpec, dt: DataTypeSpec,
                               chain_layout: bool = False) -> FeasibilityReport:
    """Evaluate every hardware mapping constraint for one configuration.

    Checks, in order: the logic budget per resource kind, the bus width of
    the per-element row and column feeds, the memory-block stripe fitting in
    the block budget, and (for the linear-chain layout) the refill constraint
    that one block tile offers at least as many cycles as there are
    processing elements.
    """
    _require_same_kinds(hw.resources, dt.unit_cost, f"data type {dt.name!r} on hardware")
    checks = []
    units_per_pe = cfg.units_x * cfg.units_y
    for kind, budget in hw.resources.items():
        used = cfg.num_pes * (dt.pe_overhead[kind] + dt.unit_cost[kind] * units_per_pe)
        checks.append(ConstraintCheck(
            f"resource:{kind}", used <= budget, f"{used} of {budget} used"))
    a_bus = cfg.units_x * dt.width_bits
    checks.append(ConstraintCheck(
        "bus_width_rows", a_bus <= hw.max_bus_width_bits,
        f"row feed {a_bus} bits vs bus limit {hw.max_bus_width_bits}"))
    b_bus = cfg.units_y * dt.width_bits
    checks.append(ConstraintCheck(
        "bus_width_cols", b_bus <= hw.max_bus_width_bits,
        f"column feed {b_bus} bits vs bus limit {hw.max_bus_width_bits}"))
    try:
        needed = min_memory_blocks(cfg, hw, dt)
        checks.append(ConstraintCheck(
            "memory_blocks", needed <= hw.memory_blocks,
            f"stripe of {needed} blocks vs {hw.memory_blocks} available"))
    except UnsupportedTypeError as exc:
        checks.append(ConstraintCheck("memory_blocks", False, str(exc)))
    if chain_layout:
        depth = cfg.tiles_x * cfg.tiles_y
        checks.append(ConstraintCheck(
            "chain_depth", depth >= cfg.num_pes,
            f"{depth} compute tiles per block tile vs {cfg.num_pes} chained elements"))
    return FeasibilityReport(tuple(checks))
