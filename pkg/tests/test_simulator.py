"""Schedule simulation: exact transfer accounting and numeric equivalence."""

from fractions import Fraction

import numpy as np
import pytest

from gemmplan.errors import ConfigurationError, InfeasibleConfigError, UnsupportedTypeError
from gemmplan.hardware import FLOAT, INTEGER, DataTypeSpec, ResourceVector, TileConfig
from gemmplan.matio import load_matrix, random_matrix, save_matrix
from gemmplan.metrics import ProblemSize, drain_efficiency, io_volume
from gemmplan.simulator import (
    ElementType,
    MatrixBuffer,
    reference_mmm,
    simulate_pe_chain,
    simulate_schedule,
    transpose_access_analysis,
)

UINT8 = ElementType(INTEGER, 8)
UINT16 = ElementType(INTEGER, 16)
UINT32 = ElementType(INTEGER, 32)
FP32 = ElementType(FLOAT, 32)
FP64 = ElementType(FLOAT, 64)

# Drawn once from numpy's seeded generator (seeds 11 and 12) and multiplied
# by hand with a pure-Python triple loop, wrapping every partial sum to
# eight bits.  Frozen here so the suite never trusts the code under test.
A8 = [[34, 32, 204, 127], [151, 153, 182, 7], [124, 37, 102, 237], [140, 18, 138, 33]]
B8 = [[156, 64, 249, 242], [16, 48, 51, 45], [148, 89, 123, 59], [243, 171, 170, 29]]
C8 = [[53, 65, 204, 43], [113, 99, 114, 96], [207, 181, 95, 20], [139, 101, 250, 13]]


def int_spec(width):
    return DataTypeSpec(f"uint{width}", width, ResourceVector({"DSP": 1}),
                        ResourceVector({"DSP": 0}), accumulation_latency=1,
                        kind=INTEGER)


def float_spec(width):
    return DataTypeSpec(f"fp{width}", width, ResourceVector({"DSP": 2}),
                        ResourceVector({"DSP": 0}), accumulation_latency=8,
                        kind=FLOAT)


def rel_err(got, want):
    """Worst elementwise error, scaled down only where |want| exceeds one."""
    got = np.asarray(got, dtype=np.float64)
    want = np.asarray(want, dtype=np.float64)
    return float(np.max(np.abs(got - want) / np.maximum(np.abs(want), 1.0)))


# --- element types and buffers -------------------------------------------

def test_element_type_validation():
    assert ElementType(INTEGER, 8).mask == 255
    assert ElementType(INTEGER, 64).mask == 2 ** 64 - 1
    assert ElementType(FLOAT, 16).dtype == np.float16
    with pytest.raises(UnsupportedTypeError):
        ElementType(FLOAT, 20)
    with pytest.raises(UnsupportedTypeError):
        ElementType(INTEGER, 0)
    with pytest.raises(UnsupportedTypeError):
        ElementType(INTEGER, 65)
    with pytest.raises(ConfigurationError):
        ElementType("decimal", 32)
    with pytest.raises(ConfigurationError):
        _ = FP32.mask


def test_matrix_buffer_masks_integers():
    buf = MatrixBuffer([[300, -1], [7, 256]], UINT8)
    assert buf.to_array().tolist() == [[44, 255], [7, 0]]
    assert buf.rows == 2 and buf.cols == 2
    with pytest.raises(ConfigurationError):
        MatrixBuffer([[1.5, 2.0]], UINT8)
    with pytest.raises(ConfigurationError):
        MatrixBuffer([1, 2, 3], UINT8)
    with pytest.raises(ConfigurationError):
        MatrixBuffer.zeros(0, 3, UINT8)


def test_matrix_buffer_equality():
    a = MatrixBuffer([[1, 2], [3, 4]], UINT16)
    assert a.equals(MatrixBuffer([[1, 2], [3, 4]], UINT16))
    assert not a.equals(MatrixBuffer([[1, 2], [3, 5]], UINT16))
    assert not a.equals(MatrixBuffer([[1, 2], [3, 4]], UINT8))


# --- reference product ----------------------------------------------------

def test_reference_matches_hand_computed_product():
    a = MatrixBuffer(A8, UINT8)
    b = MatrixBuffer(B8, UINT8)
    assert reference_mmm(a, b).to_array().tolist() == C8


def test_reference_trivial_products():
    two = MatrixBuffer([[2]], UINT16)
    three = MatrixBuffer([[3]], UINT16)
    assert reference_mmm(two, three).to_array().tolist() == [[6]]

    a = random_matrix(8, 8, UINT16, seed=5)
    identity = MatrixBuffer(np.eye(8, dtype=np.uint64), UINT16)
    assert reference_mmm(a, identity).equals(a)


def test_reference_rejects_mismatches():
    with pytest.raises(ConfigurationError):
        reference_mmm(MatrixBuffer([[1, 2]], UINT8), MatrixBuffer([[1, 2]], UINT8))
    with pytest.raises(ConfigurationError):
        reference_mmm(MatrixBuffer([[1]], UINT8), MatrixBuffer([[1]], UINT16))


# --- full-schedule executor -----------------------------------------------

def test_schedule_transfer_counts_4x4():
    p = ProblemSize(4, 4, 4)
    cfg = TileConfig(1, 1, 1, 1, 2, 2, 1, 1)  # 2x2 memory tile
    a = MatrixBuffer(A8, UINT8)
    b = MatrixBuffer(B8, UINT8)
    res = simulate_schedule(p, cfg, a, b, int_spec(8))
    assert res.io.loads_a == 32
    assert res.io.loads_b == 32
    assert res.io.stores_c == 16
    assert res.io.total == 80
    assert res.io.total == io_volume(p, 2, 2)
    assert res.io.padding_overhead == 0
    assert res.padded_problem is None
    assert res.c.to_array().tolist() == C8
    # 4 memory tiles x 4 reduction steps x 4 compute-tile positions
    assert res.compute_cycles == 64
    assert res.drain_cycles == 16
    assert res.efficiency == Fraction(4, 5)


def test_schedule_single_element_problem():
    p = ProblemSize(1, 1, 1)
    cfg = TileConfig(1, 1, 1, 1, 1, 1, 1, 1)
    a = MatrixBuffer([[7]], UINT8)
    b = MatrixBuffer([[9]], UINT8)
    res = simulate_schedule(p, cfg, a, b, int_spec(8))
    assert (res.io.loads_a, res.io.loads_b, res.io.stores_c) == (1, 1, 1)
    assert res.c.to_array().tolist() == [[63]]


def test_schedule_matches_reference_and_analytic_64():
    p = ProblemSize(64, 64, 64)
    cfg = TileConfig(2, 2, 2, 2, 2, 2, 2, 2)  # 16x16 memory tile, 2-D array
    a = random_matrix(64, 64, UINT16, seed=7)
    b = random_matrix(64, 64, UINT16, seed=8)
    res = simulate_schedule(p, cfg, a, b, int_spec(16))
    assert res.io.total == io_volume(p, 16, 16) == 36864
    assert res.c.equals(reference_mmm(a, b))


def test_schedule_rejects_wrong_operand_shape():
    p = ProblemSize(4, 4, 4)
    cfg = TileConfig(1, 1, 1, 1, 2, 2, 1, 1)
    a = MatrixBuffer(A8, UINT8)
    b = random_matrix(3, 4, UINT8, seed=1)
    with pytest.raises(ConfigurationError):
        simulate_schedule(p, cfg, a, b, int_spec(8))


def test_schedule_rejects_mismatched_element_type():
    p = ProblemSize(4, 4, 4)
    cfg = TileConfig(1, 1, 1, 1, 2, 2, 1, 1)
    a = MatrixBuffer(A8, UINT16)
    b = MatrixBuffer(B8, UINT16)
    with pytest.raises(ConfigurationError):
        simulate_schedule(p, cfg, a, b, int_spec(8))


# --- chain executor ---------------------------------------------------------

def test_chain_matches_schedule_everywhere():
    p = ProblemSize(8, 8, 8)
    cfg = TileConfig(1, 2, 4, 1, 2, 4, 1, 1)  # 8x8 tile on a 4-element chain
    a = random_matrix(8, 8, UINT16, seed=31)
    b = random_matrix(8, 8, UINT16, seed=32)
    dt = int_spec(16)
    chain = simulate_pe_chain(p, cfg, a, b, dt)
    sched = simulate_schedule(p, cfg, a, b, dt)
    assert chain.c.equals(sched.c)
    assert chain.c.equals(reference_mmm(a, b))
    assert (chain.io.loads_a, chain.io.loads_b, chain.io.stores_c) == \
        (sched.io.loads_a, sched.io.loads_b, sched.io.stores_c)
    assert chain.drain_cycles == sched.drain_cycles


def test_chain_single_element_degenerate():
    p = ProblemSize(4, 4, 4)
    cfg = TileConfig(1, 1, 1, 1, 4, 4, 1, 1)
    a = MatrixBuffer(A8, UINT8)
    b = MatrixBuffer(B8, UINT8)
    res = simulate_pe_chain(p, cfg, a, b, int_spec(8))
    assert res.c.to_array().tolist() == C8
    assert res.io.total == io_volume(p, 4, 4)


def test_chain_requires_linear_shape():
    p = ProblemSize(8, 8, 8)
    a = random_matrix(8, 8, UINT8, seed=1)
    b = random_matrix(8, 8, UINT8, seed=2)
    with pytest.raises(InfeasibleConfigError):
        simulate_pe_chain(p, TileConfig(2, 1, 2, 1, 2, 4, 1, 1), a, b, int_spec(8))
    with pytest.raises(InfeasibleConfigError):
        simulate_pe_chain(p, TileConfig(1, 1, 2, 2, 2, 2, 1, 1), a, b, int_spec(8))


def test_chain_refill_starvation_rejected():
    p = ProblemSize(4, 4, 4)
    a = MatrixBuffer(A8, UINT8)
    b = MatrixBuffer(B8, UINT8)
    # two compute tiles per block tile cannot keep four chained elements fed
    with pytest.raises(InfeasibleConfigError):
        simulate_pe_chain(p, TileConfig(1, 2, 4, 1, 1, 2, 1, 1), a, b, int_spec(8))


def test_chain_efficiency_matches_drain_model():
    p = ProblemSize(16, 16, 16)
    cfg = TileConfig(1, 2, 4, 1, 4, 8, 1, 1)  # 16x16 tile, 4-element chain
    a = random_matrix(16, 16, UINT16, seed=41)
    b = random_matrix(16, 16, UINT16, seed=42)
    res = simulate_pe_chain(p, cfg, a, b, int_spec(16))
    assert res.compute_cycles == 512
    assert res.drain_cycles == 128
    assert res.efficiency == Fraction(4, 5)
    assert res.efficiency == drain_efficiency(p, cfg)


def test_chain_efficiency_scales_with_reduction_depth():
    cfg = TileConfig(1, 2, 4, 1, 4, 8, 1, 1)
    a16 = random_matrix(16, 16, UINT16, seed=41)
    b16 = random_matrix(16, 16, UINT16, seed=42)
    for k in (16, 32, 64):
        p = ProblemSize(16, 16, k)
        a = MatrixBuffer(np.tile(a16.to_array(), (1, k // 16)), UINT16)
        b = MatrixBuffer(np.tile(b16.to_array(), (k // 16, 1)), UINT16)
        res = simulate_pe_chain(p, cfg, a, b, int_spec(16))
        assert res.efficiency == Fraction(k, k + 4)
        assert res.efficiency == drain_efficiency(p, cfg)


# --- randomized cross-checks ------------------------------------------------

CASES = [
    # (m, n, k, cfg) with the memory tile dividing the output exactly
    (8, 8, 8, TileConfig(1, 2, 4, 1, 2, 4, 1, 1)),
    (16, 8, 4, TileConfig(1, 2, 2, 1, 4, 2, 1, 1)),
    (8, 16, 12, TileConfig(1, 4, 2, 1, 2, 2, 2, 1)),
    (24, 12, 8, TileConfig(1, 3, 4, 1, 2, 2, 1, 2)),
    (12, 20, 6, TileConfig(1, 1, 2, 1, 3, 5, 1, 1)),
]


def test_random_integer_cases_bit_exact():
    for seed, (m, n, k, cfg) in enumerate(CASES * 4):
        etype = (UINT8, UINT16, UINT32)[seed % 3]
        dt = int_spec(etype.width_bits)
        a = random_matrix(m, k, etype, seed=100 + 2 * seed)
        b = random_matrix(k, n, etype, seed=101 + 2 * seed)
        p = ProblemSize(m, n, k)
        want = reference_mmm(a, b)
        sched = simulate_schedule(p, cfg, a, b, dt)
        chain = simulate_pe_chain(p, cfg, a, b, dt)
        assert sched.c.equals(want)
        assert chain.c.equals(want)
        expected_io = io_volume(p, cfg.total_rows, cfg.total_cols)
        assert sched.io.total == expected_io
        assert chain.io.total == expected_io
        assert sched.io.stores_c == m * n


def test_random_float_cases_within_tolerance():
    for seed, (m, n, k, cfg) in enumerate(CASES * 2):
        etype, tol = ((FP32, 1e-4), (FP64, 1e-12))[seed % 2]
        dt = float_spec(etype.width_bits)
        a = random_matrix(m, k, etype, seed=300 + 2 * seed)
        b = random_matrix(k, n, etype, seed=301 + 2 * seed)
        p = ProblemSize(m, n, k)
        want = a.to_array().astype(np.float64) @ b.to_array().astype(np.float64)
        sched = simulate_schedule(p, cfg, a, b, dt)
        chain = simulate_pe_chain(p, cfg, a, b, dt)
        assert rel_err(sched.c.to_array(), want) < tol
        assert rel_err(chain.c.to_array(), want) < tol
        # both executors accumulate in ascending reduction order, so they
        # agree with the stepwise reference to the last bit
        ref = reference_mmm(a, b)
        assert sched.c.equals(ref)
        assert chain.c.equals(ref)


def test_pipeline_safety_reported():
    p = ProblemSize(4, 4, 4)
    a = MatrixBuffer(A8, UINT8)
    b = MatrixBuffer(B8, UINT8)
    cfg = TileConfig(1, 1, 1, 1, 2, 2, 1, 1)  # 4 in-flight positions
    assert simulate_schedule(p, cfg, a, b, int_spec(8)).pipeline_safe
    fa = MatrixBuffer(np.asarray(A8, dtype=np.float32), FP32)
    fb = MatrixBuffer(np.asarray(B8, dtype=np.float32), FP32)
    # 4 positions cannot cover an 8-cycle accumulation latency
    assert not simulate_schedule(p, cfg, fa, fb, float_spec(32)).pipeline_safe


# --- padding -----------------------------------------------------------------

def test_indivisible_rejected_without_padding():
    p = ProblemSize(5, 5, 4)
    cfg = TileConfig(1, 1, 1, 1, 2, 2, 1, 1)
    a = random_matrix(5, 4, UINT8, seed=1)
    b = random_matrix(4, 5, UINT8, seed=2)
    with pytest.raises(InfeasibleConfigError, match="padding"):
        simulate_schedule(p, cfg, a, b, int_spec(8))


def test_padded_run_counts_overhead_separately():
    p = ProblemSize(3, 5, 2)
    cfg = TileConfig(1, 1, 1, 1, 2, 2, 1, 1)
    a = random_matrix(3, 2, UINT8, seed=61)
    b = random_matrix(2, 5, UINT8, seed=62)
    res = simulate_schedule(p, cfg, a, b, int_spec(8), pad=True)
    assert res.padded_problem == ProblemSize(4, 6, 2)
    assert res.io.loads_a == 24 and res.io.padded_loads_a == 6
    assert res.io.loads_b == 24 and res.io.padded_loads_b == 4
    assert res.io.stores_c == 24 and res.io.padded_stores_c == 9
    assert res.io.total == 72
    assert res.io.padding_overhead == 19
    # discounting stores of pad cells recovers the whole-tile-load model
    assert res.io.total - res.io.padded_stores_c == io_volume(p, 2, 2)
    assert res.c.equals(reference_mmm(a, b))


def test_padded_chain_matches_reference():
    p = ProblemSize(10, 7, 3)
    cfg = TileConfig(1, 2, 2, 1, 2, 2, 1, 1)  # 4x4 tile over a 10x7 output
    a = random_matrix(10, 3, UINT16, seed=71)
    b = random_matrix(3, 7, UINT16, seed=72)
    chain = simulate_pe_chain(p, cfg, a, b, int_spec(16), pad=True)
    sched = simulate_schedule(p, cfg, a, b, int_spec(16), pad=True)
    assert chain.c.equals(reference_mmm(a, b))
    assert sched.c.equals(chain.c)
    assert chain.io.total == sched.io.total
    assert chain.io.padding_overhead == sched.io.padding_overhead > 0


# --- access log ---------------------------------------------------------------

def test_access_log_covers_every_transfer():
    p = ProblemSize(4, 4, 4)
    cfg = TileConfig(1, 1, 1, 1, 2, 2, 1, 1)
    a = MatrixBuffer(A8, UINT8)
    b = MatrixBuffer(B8, UINT8)
    res = simulate_schedule(p, cfg, a, b, int_spec(8), record_log=True)
    log = res.io.access_log
    assert len(log) == res.io.total
    assert sum(1 for entry in log if entry[0] == "A") == res.io.loads_a
    assert sum(1 for entry in log if entry[0] == "B") == res.io.loads_b
    assert sum(1 for entry in log if entry[0] == "C") == res.io.stores_c
    # column reads of a row-major operand: strided, every burst one word long
    assert res.io.burst_runs == [1] * res.io.loads_a


def test_access_log_bursts_merge_when_column_is_contiguous():
    p = ProblemSize(4, 4, 1)
    cfg = TileConfig(1, 1, 1, 1, 2, 2, 1, 1)
    a = random_matrix(4, 1, UINT8, seed=3)
    b = random_matrix(1, 4, UINT8, seed=4)
    res = simulate_schedule(p, cfg, a, b, int_spec(8), record_log=True)
    # with one column in A, each tile's column read is two consecutive words
    assert res.io.burst_runs == [2, 2, 2, 2]


def test_access_log_off_by_default():
    p = ProblemSize(4, 4, 4)
    cfg = TileConfig(1, 1, 1, 1, 2, 2, 1, 1)
    res = simulate_schedule(p, cfg, MatrixBuffer(A8, UINT8), MatrixBuffer(B8, UINT8),
                            int_spec(8))
    assert res.io.access_log is None
    assert res.io.burst_runs is None


# --- transposition stage -----------------------------------------------------

def test_transpose_analysis_small_square():
    p = ProblemSize(4, 4, 4)
    cfg = TileConfig(1, 1, 4, 1, 1, 4, 1, 1)  # 4x4 memory tile
    stats = transpose_access_analysis(p, cfg, vector_width_elems=4)
    assert stats.direct_runs == {1: 16}
    assert stats.vectorized_runs == {4: 4}
    assert stats.num_queues == 4
    assert stats.required_queue_depth == 4
    assert stats.min_direct_run == 1
    assert stats.min_vectorized_run == 4


def test_transpose_analysis_vector_width_one_changes_nothing():
    p = ProblemSize(8, 8, 8)
    cfg = TileConfig(1, 2, 4, 1, 2, 4, 1, 1)
    stats = transpose_access_analysis(p, cfg, vector_width_elems=1)
    assert stats.vectorized_runs == stats.direct_runs


def test_transpose_analysis_wide_tile():
    p = ProblemSize(64, 64, 64)
    cfg = TileConfig(1, 2, 4, 1, 4, 8, 1, 1)  # 16-row memory tiles
    stats = transpose_access_analysis(p, cfg, vector_width_elems=8)
    assert stats.direct_runs == {1: 4096}
    assert stats.vectorized_runs == {8: 512}


def test_transpose_analysis_partial_vectors():
    p = ProblemSize(4, 4, 6)
    cfg = TileConfig(1, 1, 4, 1, 1, 4, 1, 1)
    stats = transpose_access_analysis(p, cfg, vector_width_elems=4)
    assert stats.vectorized_runs == {4: 4, 2: 4}


def test_transpose_analysis_queue_depth_requirement():
    p = ProblemSize(16, 16, 16)
    cfg = TileConfig(1, 2, 4, 1, 4, 8, 1, 1)
    stats = transpose_access_analysis(p, cfg, vector_width_elems=8, queue_depth=16)
    assert stats.required_queue_depth == 16
    with pytest.raises(ConfigurationError):
        transpose_access_analysis(p, cfg, vector_width_elems=8, queue_depth=15)
    with pytest.raises(ConfigurationError):
        transpose_access_analysis(p, cfg, vector_width_elems=0)


# --- matrix files --------------------------------------------------------------

def test_matrix_file_round_trip(tmp_path):
    for etype, seed in ((UINT8, 1), (UINT16, 2), (UINT32, 3), (FP32, 4), (FP64, 5)):
        buf = random_matrix(5, 3, etype, seed=seed)
        path = tmp_path / f"m{seed}.gpmx"
        save_matrix(str(path), buf)
        assert load_matrix(str(path)).equals(buf)


def test_matrix_file_rejects_corruption(tmp_path):
    buf = random_matrix(4, 4, UINT16, seed=9)
    path = tmp_path / "m.gpmx"
    save_matrix(str(path), buf)
    raw = path.read_bytes()

    short = tmp_path / "short.gpmx"
    short.write_bytes(raw[:10])
    with pytest.raises(ConfigurationError, match="truncated"):
        load_matrix(str(short))

    bad_magic = tmp_path / "magic.gpmx"
    bad_magic.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ConfigurationError, match="magic"):
        load_matrix(str(bad_magic))

    bad_kind = tmp_path / "kind.gpmx"
    bad_kind.write_bytes(raw[:4] + b"\x09\x00\x00\x00" + raw[8:])
    with pytest.raises(ConfigurationError, match="kind"):
        load_matrix(str(bad_kind))

    clipped = tmp_path / "clipped.gpmx"
    clipped.write_bytes(raw[:-2])
    with pytest.raises(ConfigurationError, match="payload"):
        load_matrix(str(clipped))


def test_random_matrix_is_deterministic():
    assert random_matrix(4, 4, UINT8, seed=11).to_array().tolist() == A8
    again = random_matrix(4, 4, UINT8, seed=11)
    assert again.to_array().tolist() == A8
    with pytest.raises(ConfigurationError):
        random_matrix(0, 4, UINT8, seed=1)


def test_random_matrix_shares_generator_state():
    rng = np.random.default_rng(11)
    first = random_matrix(4, 4, UINT8, seed=rng)
    second = random_matrix(4, 4, UINT8, seed=rng)
    assert first.to_array().tolist() == A8
    assert not second.equals(first)
