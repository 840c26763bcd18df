"""Module-level architecture graphs for the two array layouts.

The compute array is either a linear chain of processing elements (operands
enter at the head, results drain back out of the head, so only one module
sits near the memory interface) or a 2-D grid with dedicated feeders on the
left and top edges.  Graphs are built from a tile configuration, checked for
the structural properties the design depends on (point-to-point buses, a
constant per-element bus budget, the interleaved output partition), and can
be exported to a deterministic text form for diffing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .errors import ConfigurationError, InfeasibleConfigError
from .hardware import ConstraintCheck, DataTypeSpec, FeasibilityReport, TileConfig

CHAIN = "1d"
GRID = "2d"

A_BUS = "A"
B_BUS = "B"
C_BUS = "C"
MEM = "mem"


@dataclass(frozen=True)
class Node:
    node_id: str
    kind: str
    attrs: Tuple[Tuple[str, int], ...] = ()

    def get(self, key: str, default: int = 0) -> int:
        for name, value in self.attrs:
            if name == key:
                return value
        return default


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    channel: str
    width_bits: int
    depth_words: int = 1


@dataclass(frozen=True)
class ModuleGraph:
    layout: str
    config: TileConfig
    nodes: Tuple[Node, ...]
    edges: Tuple[Edge, ...]

    def node(self, node_id: str) -> Node:
        for node in self.nodes:
            if node.node_id == node_id:
                return node
        raise KeyError(node_id)

    def pes(self) -> Tuple[Node, ...]:
        return tuple(n for n in self.nodes if n.kind == "PE")


def build_layout(cfg: TileConfig, dt: DataTypeSpec, layout: str = CHAIN,
                 transpose_a: bool = True, a_vector_width: int = 1) -> ModuleGraph:
    """Construct the module graph for one configuration.

    The chain layout requires units_x = 1 and pes_y = 1.  A grid degenerates
    into the chain when those hold, so requesting the grid with pes_y = 1 and
    units_x = 1 returns the chain graph; the two builders then agree exactly.
    """
    if layout not in (CHAIN, GRID):
        raise ConfigurationError(f"layout must be {CHAIN!r} or {GRID!r}, got {layout!r}")
    if a_vector_width < 1:
        raise ConfigurationError("a_vector_width must be >= 1")
    tile_elems = cfg.total_rows * cfg.total_cols
    if tile_elems % cfg.num_pes != 0:
        raise InfeasibleConfigError(
            f"memory tile of {tile_elems} elements does not split evenly over "
            f"{cfg.num_pes} processing elements")
    if layout == CHAIN or (cfg.pes_y == 1 and cfg.units_x == 1):
        return _build_chain(cfg, dt, transpose_a, a_vector_width)
    return _build_grid(cfg, dt)


def _build_chain(cfg: TileConfig, dt: DataTypeSpec, transpose_a: bool,
                 a_vector_width: int) -> ModuleGraph:
    if cfg.units_x != 1 or cfg.pes_y != 1:
        raise InfeasibleConfigError(
            f"chain layout requires units_x=1 and pes_y=1, got "
            f"units_x={cfg.units_x}, pes_y={cfg.pes_y}")
    if cfg.tiles_x * cfg.tiles_y < cfg.num_pes:
        raise InfeasibleConfigError(
            f"chain refill starves: {cfg.tiles_x * cfg.tiles_y} compute tiles per "
            f"block tile is less than the {cfg.num_pes} chained elements")
    w = dt.width_bits
    a_width = cfg.units_x * w
    b_width = cfg.units_y * w
    c_width = cfg.units_y * w
    pes = cfg.num_pes
    share = cfg.total_rows * cfg.total_cols // pes

    nodes = [Node("read_a", "ReadA")]
    a_source = "read_a"
    if transpose_a:
        nodes.append(Node("transpose", "Transpose",
                          (("queues", a_vector_width),
                           ("queue_depth", cfg.total_rows))))
        a_source = "transpose"
    nodes.append(Node("feed_b", "FeedB",
                      (("buffer_words", cfg.total_cols // cfg.units_y),)))
    for q in range(pes):
        nodes.append(Node(f"pe{q}", "PE",
                          (("index", q), ("a_registers", 2), ("c_words", share))))
    nodes.append(Node("write_c", "WriteC"))

    edges = []
    if transpose_a:
        edges.append(Edge("read_a", "transpose", MEM, a_vector_width * w,
                          depth_words=cfg.total_rows))
    edges.append(Edge(a_source, "pe0", A_BUS, a_width))
    edges.append(Edge("feed_b", "pe0", B_BUS, b_width,
                      depth_words=cfg.total_cols // cfg.units_y))
    for q in range(pes - 1):
        edges.append(Edge(f"pe{q}", f"pe{q + 1}", A_BUS, a_width))
        edges.append(Edge(f"pe{q}", f"pe{q + 1}", B_BUS, b_width))
        edges.append(Edge(f"pe{q + 1}", f"pe{q}", C_BUS, c_width))
    edges.append(Edge("pe0", "write_c", C_BUS, c_width))
    return ModuleGraph(CHAIN, cfg, tuple(nodes), tuple(edges))


def _build_grid(cfg: TileConfig, dt: DataTypeSpec) -> ModuleGraph:
    w = dt.width_bits
    a_width = cfg.units_x * w
    b_width = cfg.units_y * w
    c_width = cfg.units_y * w
    share = cfg.total_rows * cfg.total_cols // cfg.num_pes

    nodes = []
    for r in range(cfg.pes_x):
        nodes.append(Node(f"feed_a{r}", "FeedA", (("index", r),)))
    for c in range(cfg.pes_y):
        nodes.append(Node(f"feed_b{c}", "FeedB", (("index", c),)))
    for r in range(cfg.pes_x):
        for c in range(cfg.pes_y):
            nodes.append(Node(f"pe_{r}_{c}", "PE",
                              (("row", r), ("col", c), ("c_words", share))))
    nodes.append(Node("store_c", "StoreC"))

    edges = []
    for r in range(cfg.pes_x):
        edges.append(Edge(f"feed_a{r}", f"pe_{r}_0", A_BUS, a_width))
        for c in range(cfg.pes_y - 1):
            edges.append(Edge(f"pe_{r}_{c}", f"pe_{r}_{c + 1}", A_BUS, a_width))
    for c in range(cfg.pes_y):
        edges.append(Edge(f"feed_b{c}", f"pe_0_{c}", B_BUS, b_width))
        for r in range(cfg.pes_x - 1):
            edges.append(Edge(f"pe_{r}_{c}", f"pe_{r + 1}_{c}", B_BUS, b_width))
    for c in range(cfg.pes_y):
        for r in range(cfg.pes_x - 1):
            edges.append(Edge(f"pe_{r}_{c}", f"pe_{r + 1}_{c}", C_BUS, c_width))
        edges.append(Edge(f"pe_{cfg.pes_x - 1}_{c}", "store_c", C_BUS, c_width))
    return ModuleGraph(GRID, cfg, tuple(nodes), tuple(edges))


def max_fanout(graph: ModuleGraph) -> int:
    """Largest number of sinks driven by any single output port.

    Ports are identified by (module, channel); every bus in these layouts is
    point-to-point, which is what keeps routing independent of array size.
    """
    counts: Dict[Tuple[str, str], int] = {}
    for edge in graph.edges:
        key = (edge.src, edge.channel)
        counts[key] = counts.get(key, 0) + 1
    return max(counts.values()) if counts else 0


def verify_structure(graph: ModuleGraph, cfg: TileConfig,
                     max_bus_width_bits: Optional[int] = None) -> FeasibilityReport:
    """Check the structural properties the layouts are designed around."""
    checks = []
    pes = graph.pes()
    num_pes = cfg.num_pes

    if graph.layout == CHAIN:
        has_transpose = any(n.kind == "Transpose" for n in graph.nodes)
        expected_nodes = (4 if has_transpose else 3) + num_pes
    else:
        expected_nodes = cfg.pes_x + cfg.pes_y + num_pes + 1
    checks.append(ConstraintCheck(
        "node_count", len(graph.nodes) == expected_nodes,
        f"{len(graph.nodes)} modules vs expected {expected_nodes}"))

    pe_ids = {n.node_id for n in pes}
    compute_edges = [e for e in graph.edges
                     if e.channel in (A_BUS, B_BUS, C_BUS)
                     and (e.src in pe_ids or e.dst in pe_ids)]
    checks.append(ConstraintCheck(
        "compute_connections", len(compute_edges) == 3 * num_pes,
        f"{len(compute_edges)} data buses touch the array vs expected {3 * num_pes}"))

    fanout = max_fanout(graph)
    checks.append(ConstraintCheck(
        "point_to_point", fanout == 1,
        f"max sinks per output port is {fanout}"))

    per_pe_buses = {pid: 0 for pid in pe_ids}
    for edge in compute_edges:
        if edge.src in per_pe_buses:
            per_pe_buses[edge.src] += 1
        if edge.dst in per_pe_buses:
            per_pe_buses[edge.dst] += 1
    busiest = max(per_pe_buses.values())
    checks.append(ConstraintCheck(
        "pe_bus_budget", busiest <= 6,
        f"busiest processing element carries {busiest} data buses (limit 6)"))

    if graph.layout == CHAIN:
        registers = sum(n.get("a_registers") for n in pes)
        checks.append(ConstraintCheck(
            "double_buffer_registers", registers == 2 * num_pes,
            f"{registers} operand registers vs expected {2 * num_pes}"))
        depth = cfg.tiles_x * cfg.tiles_y
        checks.append(ConstraintCheck(
            "chain_depth", depth >= num_pes,
            f"{depth} compute tiles per block tile vs {num_pes} chained elements"))

    tile_elems = cfg.total_rows * cfg.total_cols
    shares = [n.get("c_words") for n in pes]
    balanced = len(set(shares)) == 1 and sum(shares) == tile_elems
    checks.append(ConstraintCheck(
        "output_partition", balanced,
        f"{len(pes)} shares of {shares[0] if shares else 0} words sum to "
        f"{sum(shares)} vs tile of {tile_elems}"))

    if max_bus_width_bits is not None:
        widest = max(e.width_bits for e in graph.edges)
        checks.append(ConstraintCheck(
            "bus_widths", widest <= max_bus_width_bits,
            f"widest bus {widest} bits vs limit {max_bus_width_bits}"))
    return FeasibilityReport(tuple(checks))


def export_graph(graph: ModuleGraph) -> str:
    """Deterministic text form: same graph, same bytes, every time."""
    lines = [f"layout {graph.layout} pes={graph.config.num_pes}"]
    for node in graph.nodes:
        attrs = "".join(f" {key}={value}" for key, value in node.attrs)
        lines.append(f"node {node.node_id} kind={node.kind}{attrs}")
    for edge in graph.edges:
        lines.append(f"edge {edge.src} -> {edge.dst} channel={edge.channel} "
                     f"width={edge.width_bits} depth={edge.depth_words}")
    return "\n".join(lines) + "\n"
