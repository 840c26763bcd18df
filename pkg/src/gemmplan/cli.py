"""Command-line front end.

Subcommands:

* ``analyze``       report every metric and constraint for explicit tile parameters
* ``optimize``      greedy parameter selection, optionally with its reasoning
* ``sweep``         enumerate and rank every feasible configuration
* ``sweep-memory``  scaling of intensity and block usage with memory-tile size
* ``simulate``      run the functional simulators and verify against the oracle
* ``layout``        emit and check the module graph for a configuration

Exit codes: 0 on success, 2 for unreadable/invalid inputs, 3 when no feasible
design exists (or the analyzed one is infeasible), 4 when a simulation fails
verification.
"""

from __future__ import annotations

import argparse
import csv
import sys
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import layout as layout_mod
from . import matio, simulator, tiler
from .errors import ConfigurationError, GemmplanError, InfeasibleConfigError, SpecFileError
from .hardware import FLOAT, TileConfig, block_words, ceil_div
from .metrics import (
    DesignPoint,
    ProblemSize,
    arithmetic_intensity,
    evaluate_design,
    io_volume,
)
from .specfile import SpecFile, parse_spec_file

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_VERIFY = 4

_REL_TOL = {16: 1e-2, 32: 1e-4, 64: 1e-12}

CONFIG_FIELDS = "units_x,units_y,pes_x,pes_y,tiles_x,tiles_y,blocks_x,blocks_y"


def _parse_problem(text: str) -> ProblemSize:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigurationError(f"--problem wants m,n,k, got {text!r}")
    try:
        m, n, k = (int(part) for part in parts)
    except ValueError:
        raise ConfigurationError(f"--problem wants three integers, got {text!r}") from None
    return ProblemSize(m, n, k)


def _parse_config(text: str) -> TileConfig:
    parts = text.split(",")
    if len(parts) != 8:
        raise ConfigurationError(f"--config wants {CONFIG_FIELDS}, got {text!r}")
    try:
        values = [int(part) for part in parts]
    except ValueError:
        raise ConfigurationError(f"--config wants eight integers, got {text!r}") from None
    return TileConfig(*values)


def _frequency(spec: SpecFile, args) -> Optional[float]:
    if getattr(args, "frequency", None) is not None:
        return args.frequency
    return spec.default_frequency_hz


def _layout_name(spec: SpecFile, args) -> str:
    return getattr(args, "layout", None) or spec.default_layout


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_csv(path: str) -> Tuple[List[str], List[dict]]:
    """Read back any CSV this tool writes; every command's output round-trips."""
    with open(path, "r", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ConfigurationError(f"{path}: empty CSV")
        return list(reader.fieldnames), list(reader)


def _print_point(point: DesignPoint, heading: str) -> None:
    cfg = point.config
    print(heading)
    print(f"  tile parameters      : {','.join(str(v) for v in cfg.as_tuple())} "
          f"({CONFIG_FIELDS})")
    print(f"  parallel units       : {point.num_units} "
          f"({point.num_pes} processing elements)")
    print(f"  peak throughput      : {point.ops_per_cycle} ops/cycle, "
          f"{point.ops_per_cycle * point.frequency_hz / 1e9:.2f} Gop/s "
          f"at {point.frequency_hz / 1e6:.6g} MHz")
    print(f"  memory tile          : {point.tile_rows} x {point.tile_cols} elements")
    print(f"  memory blocks        : stripe {point.min_blocks}, usable "
          f"{point.usable_blocks}, used {point.blocks_used}, "
          f"{point.words_per_block} words each at {point.port_width_bits} bits")
    print(f"  on-chip capacity     : {point.on_chip_words} words")
    print(f"  compute intensity    : {float(point.comp_intensity):.2f} updates/element")
    print(f"  arithmetic intensity : {float(point.arith_intensity):.2f} op/byte")
    if point.io_elements is not None:
        print(f"  off-chip transfers   : {point.io_elements} elements for "
              f"{point.problem.m}x{point.problem.n}x{point.problem.k}")
    print(f"  model run time       : {point.time_seconds:.6g} s")
    if point.bandwidth_bytes_per_s is not None:
        print(f"  bandwidth demand     : {point.bandwidth_bytes_per_s / 1e9:.3f} GB/s")
    print(f"  compute/total cycles : {float(point.drain_fraction):.4f}")
    print(f"  accumulation safe    : {'yes' if point.pipeline_safe else 'no'}")
    print("  feasibility:")
    print(point.feasibility.describe())


_POINT_CSV_HEADER = [
    "units_x", "units_y", "pes_x", "pes_y", "tiles_x", "tiles_y", "blocks_x",
    "blocks_y", "num_units", "ops_per_cycle", "tile_rows", "tile_cols",
    "comp_intensity", "arith_intensity", "blocks_used", "io_elements",
    "time_seconds", "bandwidth_bytes_per_s",
]


def _point_csv_row(point: DesignPoint) -> List:
    return [*point.config.as_tuple(), point.num_units, point.ops_per_cycle,
            point.tile_rows, point.tile_cols,
            repr(float(point.comp_intensity)), repr(float(point.arith_intensity)),
            point.blocks_used, point.io_elements, repr(point.time_seconds),
            repr(point.bandwidth_bytes_per_s) if point.bandwidth_bytes_per_s is not None else ""]


def cmd_analyze(args) -> int:
    spec = parse_spec_file(args.spec)
    dt = spec.datatype(args.dtype)
    cfg = _parse_config(args.config)
    p = _parse_problem(args.problem)
    chain = _layout_name(spec, args) == "1d"
    point = evaluate_design(cfg, spec.hardware, dt, p, _frequency(spec, args),
                            chain_layout=chain)
    _print_point(point, f"analysis of {dt.name} configuration")
    if not point.feasibility.ok:
        failed = ", ".join(c.name for c in point.feasibility.failed())
        print(f"infeasible: {failed}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _bounds_from_args(spec: SpecFile, args) -> tiler.SearchBounds:
    return tiler.SearchBounds(
        layout=_layout_name(spec, args),
        frequency_hz=_frequency(spec, args),
        max_units_x=getattr(args, "max_units_x", None),
        max_units_y=getattr(args, "max_units_y", None),
        max_pes_x=getattr(args, "max_pes_x", None),
        max_pes_y=getattr(args, "max_pes_y", None),
        fixed_units_y=getattr(args, "fix_units_y", None),
        fixed_num_pes=getattr(args, "fix_pes", None),
    )


def cmd_optimize(args) -> int:
    spec = parse_spec_file(args.spec)
    dt = spec.datatype(args.dtype)
    p = _parse_problem(args.problem)
    bounds = _bounds_from_args(spec, args)
    point, notes = tiler.explain_selection(spec.hardware, dt, p, bounds)
    if args.explain:
        print("selection steps:")
        for note in notes:
            print(f"  - {note}")
    _print_point(point, f"selected {dt.name} configuration")
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = parse_spec_file(args.spec)
    dt = spec.datatype(args.dtype)
    p = _parse_problem(args.problem)
    bounds = _bounds_from_args(spec, args)
    ranked = tiler.sweep(spec.hardware, dt, p, bounds)
    if len(ranked) == 0:
        print("no feasible configuration in the given bounds", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"{len(ranked)} feasible configurations; top {min(args.top, len(ranked))}:")
    print(f"  {'config':38} {'ops/cyc':>8} {'intensity':>10} {'tile':>13} {'blocks':>7}")
    for point in list(ranked)[:args.top]:
        cfg_text = ",".join(str(v) for v in point.config.as_tuple())
        print(f"  {cfg_text:38} {point.ops_per_cycle:>8} "
              f"{float(point.arith_intensity):>10.2f} "
              f"{point.tile_rows:>6}x{point.tile_cols:<6} {point.blocks_used:>7}")
    if args.csv:
        write_csv(args.csv, _POINT_CSV_HEADER, [_point_csv_row(pt) for pt in ranked])
        print(f"wrote {len(ranked)} rows to {args.csv}")
    return EXIT_OK


def cmd_sweep_memory(args) -> int:
    spec = parse_spec_file(args.spec)
    dt = spec.datatype(args.dtype)
    hw = spec.hardware
    p = _parse_problem(args.problem)
    bounds = _bounds_from_args(spec, args)
    if args.units_y is not None and args.pes is not None:
        units_y, pes_x = args.units_y, args.pes
    else:
        picked = tiler.select_parameters(hw, dt, p, bounds)
        units_y, pes_x = picked.config.units_y, picked.config.pes_x
    freq = _frequency(spec, args) or hw.frequency_hz
    port_width, words_per_block = block_words(hw, dt)
    stripe = pes_x * ceil_div(dt.width_bits * units_y, port_width)
    if stripe > hw.memory_blocks:
        print(f"stripe of {stripe} blocks exceeds the {hw.memory_blocks} available",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    max_tiles = hw.memory_blocks // stripe
    num_units = units_y * pes_x
    header = ["block_tiles", "memory_tile_elems", "blocks_used", "utilization",
              "tile_rows", "tile_cols", "arith_intensity", "bandwidth_bytes_per_s"]
    rows = []
    for g in range(1, max_tiles + 1):
        best = None
        for split in tiler._split_candidates(units_y, pes_x, words_per_block, g):
            tiles_x, tiles_y, blocks_x, blocks_y = split
            r = pes_x * tiles_x * blocks_x
            c = units_y * tiles_y * blocks_y
            key = (abs(c - r), split)
            if best is None or key < best[0]:
                best = (key, r, c)
        _, tile_rows, tile_cols = best
        intensity = arithmetic_intensity(tile_rows, tile_cols, dt.width_bits)
        bandwidth = 2 * freq * num_units / float(intensity)
        rows.append([g, tile_rows * tile_cols, g * stripe,
                     repr(g * stripe / hw.memory_blocks), tile_rows, tile_cols,
                     repr(float(intensity)), repr(bandwidth)])
    print(f"memory-tile sweep for {dt.name}: {units_y} columns/element, "
          f"{pes_x} elements, stripe {stripe} of {hw.memory_blocks} blocks")
    print(f"  {'tiles':>5} {'elements':>10} {'blocks':>7} {'util':>7} "
          f"{'shape':>14} {'op/B':>8} {'GB/s':>8}")
    for row in rows:
        print(f"  {row[0]:>5} {row[1]:>10} {row[2]:>7} {float(row[3]):>7.1%} "
              f"{row[4]:>6}x{row[5]:<7} {float(row[6]):>8.1f} {float(row[7]) / 1e9:>8.2f}")
    if args.csv:
        write_csv(args.csv, header, rows)
        print(f"wrote {len(rows)} rows to {args.csv}")
    return EXIT_OK


def _load_operands(args, p: ProblemSize, dt) -> Tuple[simulator.MatrixBuffer, simulator.MatrixBuffer]:
    etype = simulator.ElementType.from_spec(dt)
    if args.a or args.b:
        if not (args.a and args.b):
            raise ConfigurationError("--a and --b must be given together")
        a = matio.load_matrix(args.a)
        b = matio.load_matrix(args.b)
        return a, b
    rng = np.random.default_rng(args.seed)
    a = matio.random_matrix(p.m, p.k, etype, rng)
    b = matio.random_matrix(p.k, p.n, etype, rng)
    return a, b


def _verify_result(sim: simulator.SimResult, oracle: simulator.MatrixBuffer,
                   dt) -> Tuple[bool, str]:
    if dt.kind == FLOAT:
        got = sim.c.data.astype(np.float64)
        want = oracle.data.astype(np.float64)
        scale = np.maximum(np.abs(want), np.finfo(np.float64).tiny)
        err = float(np.max(np.abs(got - want) / scale)) if want.size else 0.0
        tol = _REL_TOL[dt.width_bits]
        return err <= tol, f"max rel err {err:.3e} (tol {tol:.0e})"
    exact = bool(np.array_equal(sim.c.data, oracle.data))
    return exact, "bit-exact" if exact else "results differ"


def cmd_simulate(args) -> int:
    spec = parse_spec_file(args.spec)
    dt = spec.datatype(args.dtype)
    cfg = _parse_config(args.config)
    p = _parse_problem(args.problem)
    a, b = _load_operands(args, p, dt)
    record = args.csv is not None
    executors = {"schedule": [simulator.simulate_schedule],
                 "chain": [simulator.simulate_pe_chain],
                 "both": [simulator.simulate_schedule, simulator.simulate_pe_chain]}[args.executor]

    oracle = simulator.reference_mmm(a, b)
    failures = 0
    for run in executors:
        sim = run(p, cfg, a, b, dt, pad=args.pad, record_log=record)
        name = run.__name__
        analytic = io_volume(p if sim.padded_problem is None else sim.padded_problem,
                             cfg.total_rows, cfg.total_cols)
        io_ok = sim.io.total == analytic
        print(f"{name}: {p.m}x{p.n}x{p.k} {dt.name}")
        print(f"  transfers: {sim.io.total} (analytic: {analytic}) "
              f"{'OK' if io_ok else 'MISMATCH'}")
        if sim.io.padding_overhead:
            print(f"  padding overhead: {sim.io.padding_overhead} transfers "
                  f"({sim.io.padded_loads_a} A, {sim.io.padded_loads_b} B, "
                  f"{sim.io.padded_stores_c} C)")
        value_ok, detail = _verify_result(sim, oracle, dt)
        print(f"  result vs reference: {detail} {'OK' if value_ok else 'MISMATCH'}")
        print(f"  compute cycles {sim.compute_cycles}, drain cycles {sim.drain_cycles}, "
              f"efficiency {float(sim.efficiency):.4f}")
        print(f"  accumulation safe: {'yes' if sim.pipeline_safe else 'no'}")
        if not (io_ok and value_ok):
            failures += 1
        if record:
            rows = [[op, ti, tj, "" if kk is None else kk, addr]
                    for op, ti, tj, kk, addr in sim.io.access_log]
            write_csv(args.csv, ["operand", "tile_row", "tile_col", "k", "address"], rows)
            print(f"  wrote {len(rows)} access-log rows to {args.csv}")
            record = False  # one log file is enough when running both executors
    if args.out:
        matio.save_matrix(args.out, oracle if args.executor == "both" else sim.c)
    if args.efficiency_sweep:
        code = _efficiency_sweep(args, spec, dt, cfg)
        if code != EXIT_OK:
            return code
    return EXIT_VERIFY if failures else EXIT_OK


def _efficiency_sweep(args, spec: SpecFile, dt, cfg: TileConfig) -> int:
    sizes = [int(part) for part in args.efficiency_sweep.split(",") if part.strip()]
    etype = simulator.ElementType.from_spec(dt)
    print(f"drain-efficiency sweep (chain of {cfg.num_pes}):")
    print(f"  {'k':>6} {'compute':>10} {'drain':>8} {'measured':>10} {'analytic':>10}")
    bad = 0
    for k in sizes:
        p = ProblemSize(cfg.total_rows, cfg.total_cols, k)
        rng = np.random.default_rng(args.seed)
        a = matio.random_matrix(p.m, p.k, etype, rng)
        b = matio.random_matrix(p.k, p.n, etype, rng)
        sim = simulator.simulate_pe_chain(p, cfg, a, b, dt)
        analytic = Fraction(k, k + cfg.num_pes)
        ok = sim.efficiency == analytic
        bad += 0 if ok else 1
        print(f"  {k:>6} {sim.compute_cycles:>10} {sim.drain_cycles:>8} "
              f"{float(sim.efficiency):>10.4f} {float(analytic):>10.4f} "
              f"{'OK' if ok else 'MISMATCH'}")
    return EXIT_VERIFY if bad else EXIT_OK


def cmd_layout(args) -> int:
    spec = parse_spec_file(args.spec)
    dt = spec.datatype(args.dtype)
    cfg = _parse_config(args.config)
    graph = layout_mod.build_layout(cfg, dt, layout=_layout_name(spec, args),
                                    transpose_a=not args.no_transpose,
                                    a_vector_width=args.vector_width)
    sys.stdout.write(layout_mod.export_graph(graph))
    if args.verify:
        report = layout_mod.verify_structure(graph, cfg,
                                             spec.hardware.max_bus_width_bits)
        print("structure checks:")
        print(report.describe())
        if not report.ok:
            return EXIT_INFEASIBLE
    return EXIT_OK


def _add_common(sub, problem=True, config=False):
    sub.add_argument("--spec", required=True, help="hardware description file")
    sub.add_argument("--dtype", required=True, help="data type name from the file")
    if problem:
        sub.add_argument("--problem", required=True, help="matrix sizes m,n,k")
    if config:
        sub.add_argument("--config", required=True,
                         help=f"tile parameters {CONFIG_FIELDS}")
    sub.add_argument("--frequency", type=float, default=None,
                     help="clock in Hz (default: file [defaults] or device rating)")
    sub.add_argument("--layout", choices=["1d", "2d"], default=None,
                     help="array layout (default: file [defaults])")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gemmplan",
        description="Tiling design-space exploration and schedule simulation "
                    "for matrix multiplication on constrained accelerators")
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("analyze", help="evaluate explicit tile parameters")
    _add_common(sub, config=True)
    sub.set_defaults(func=cmd_analyze)

    sub = commands.add_parser("optimize", help="greedy parameter selection")
    _add_common(sub)
    sub.add_argument("--explain", action="store_true",
                     help="print the binding constraint of each decision")
    sub.add_argument("--fix-units-y", dest="fix_units_y", type=int, default=None)
    sub.add_argument("--fix-pes", dest="fix_pes", type=int, default=None)
    sub.add_argument("--max-pes-x", dest="max_pes_x", type=int, default=None)
    sub.add_argument("--max-units-y", dest="max_units_y", type=int, default=None)
    sub.set_defaults(func=cmd_optimize)

    sub = commands.add_parser("sweep", help="rank every feasible configuration")
    _add_common(sub)
    sub.add_argument("--csv", default=None, help="write all ranked rows to a CSV")
    sub.add_argument("--top", type=int, default=10, help="rows to print (default 10)")
    sub.add_argument("--fix-units-y", dest="fix_units_y", type=int, default=None)
    sub.add_argument("--fix-pes", dest="fix_pes", type=int, default=None)
    sub.add_argument("--max-units-x", dest="max_units_x", type=int, default=None)
    sub.add_argument("--max-units-y", dest="max_units_y", type=int, default=None)
    sub.add_argument("--max-pes-x", dest="max_pes_x", type=int, default=None)
    sub.add_argument("--max-pes-y", dest="max_pes_y", type=int, default=None)
    sub.set_defaults(func=cmd_sweep)

    sub = commands.add_parser("sweep-memory",
                              help="intensity and block usage vs memory-tile size")
    _add_common(sub)
    sub.add_argument("--units-y", type=int, default=None,
                     help="columns per processing element (default: greedy pick)")
    sub.add_argument("--pes", type=int, default=None,
                     help="processing elements (default: greedy pick)")
    sub.add_argument("--csv", default=None)
    sub.set_defaults(func=cmd_sweep_memory)

    sub = commands.add_parser("simulate", help="run the functional simulators")
    _add_common(sub, config=True)
    sub.add_argument("--seed", type=int, default=0, help="operand generator seed")
    sub.add_argument("--a", default=None, help="load A from a matrix file")
    sub.add_argument("--b", default=None, help="load B from a matrix file")
    sub.add_argument("--out", default=None, help="save the verified product")
    sub.add_argument("--executor", choices=["schedule", "chain", "both"],
                     default="schedule")
    mode = sub.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="pad", action="store_false",
                      help="reject non-dividing tiles (default)")
    mode.add_argument("--pad", dest="pad", action="store_true",
                      help="zero-pad up to the tile grid and report the overhead")
    sub.set_defaults(pad=False)
    sub.add_argument("--csv", default=None, help="write the per-element access log")
    sub.add_argument("--efficiency-sweep", default=None, metavar="K1,K2,...",
                     help="also sweep the reduction size and check drain efficiency")
    sub.set_defaults(func=cmd_simulate)

    sub = commands.add_parser("layout", help="emit the module graph")
    _add_common(sub, problem=False, config=True)
    sub.add_argument("--no-transpose", action="store_true",
                     help="omit the operand transposition stage")
    sub.add_argument("--vector-width", type=int, default=1,
                     help="elements per memory read into the transposition stage")
    sub.add_argument("--verify", action="store_true", help="check structural properties")
    sub.set_defaults(func=cmd_layout)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasibleConfigError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except GemmplanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
