"""Design-space exploration and schedule simulation for tiled matrix
multiplication on accelerators with fixed compute, storage, and bandwidth
budgets.

The package answers two questions about a hardware description and a data
type: which tiling of C = A @ B maximizes throughput while minimizing
off-chip traffic, and does the resulting schedule really move only as much
data as the closed-form transfer count says.  The first is handled by
:mod:`gemmplan.tiler` and :mod:`gemmplan.metrics`, the second by
:mod:`gemmplan.simulator`, which executes the schedule element by element
and counts every transfer.
"""

from .errors import (
    ConfigurationError,
    GemmplanError,
    InfeasibleConfigError,
    SpecFileError,
    UnsupportedTypeError,
)
from .hardware import (
    FLOAT,
    INTEGER,
    ConstraintCheck,
    DataTypeSpec,
    FeasibilityReport,
    HardwareSpec,
    ResourceVector,
    TileConfig,
    block_words,
    ceil_div,
    check_resource_feasibility,
    max_compute_units,
    min_memory_blocks,
    usable_memory_blocks,
)
from .layout import (
    CHAIN,
    GRID,
    Edge,
    ModuleGraph,
    Node,
    build_layout,
    export_graph,
    max_fanout,
    verify_structure,
)
from .matio import load_matrix, random_matrix, save_matrix
from .metrics import (
    DesignPoint,
    ProblemSize,
    accumulation_collision_safe,
    arithmetic_intensity,
    average_bandwidth,
    collision_distance,
    computational_intensity,
    drain_efficiency,
    evaluate_design,
    execution_time,
    io_volume,
    io_volume_estimate,
    optimal_square_tile,
    peak_ops_per_cycle,
)
from .simulator import (
    ElementType,
    IoTrace,
    MatrixBuffer,
    SimResult,
    TransposeAccessStats,
    reference_mmm,
    simulate_pe_chain,
    simulate_schedule,
    transpose_access_analysis,
)
from .specfile import SpecFile, parse_spec_file, parse_spec_text
from .tiler import RankedDesigns, SearchBounds, explain_selection, select_parameters, sweep

__version__ = "0.1.0"

__all__ = [
    "CHAIN",
    "ConfigurationError",
    "ConstraintCheck",
    "DataTypeSpec",
    "DesignPoint",
    "Edge",
    "ElementType",
    "FLOAT",
    "FeasibilityReport",
    "GRID",
    "GemmplanError",
    "HardwareSpec",
    "INTEGER",
    "InfeasibleConfigError",
    "IoTrace",
    "MatrixBuffer",
    "ModuleGraph",
    "Node",
    "ProblemSize",
    "RankedDesigns",
    "ResourceVector",
    "SearchBounds",
    "SimResult",
    "SpecFile",
    "SpecFileError",
    "TileConfig",
    "TransposeAccessStats",
    "UnsupportedTypeError",
    "accumulation_collision_safe",
    "arithmetic_intensity",
    "average_bandwidth",
    "block_words",
    "build_layout",
    "ceil_div",
    "check_resource_feasibility",
    "collision_distance",
    "computational_intensity",
    "drain_efficiency",
    "evaluate_design",
    "execution_time",
    "explain_selection",
    "export_graph",
    "io_volume",
    "io_volume_estimate",
    "load_matrix",
    "max_compute_units",
    "max_fanout",
    "min_memory_blocks",
    "optimal_square_tile",
    "parse_spec_file",
    "parse_spec_text",
    "peak_ops_per_cycle",
    "random_matrix",
    "reference_mmm",
    "save_matrix",
    "select_parameters",
    "simulate_pe_chain",
    "simulate_schedule",
    "sweep",
    "transpose_access_analysis",
    "usable_memory_blocks",
    "verify_structure",
]
