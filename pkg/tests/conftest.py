"""Shared fixtures: the shipped device description and small hand-sized devices."""

from pathlib import Path

import pytest

from gemmplan.hardware import FLOAT, INTEGER, DataTypeSpec, HardwareSpec, ResourceVector
from gemmplan.specfile import parse_spec_file

VU9P_PATH = Path(__file__).resolve().parents[1] / "specs" / "vu9p.ini"


@pytest.fixture(scope="session")
def vu9p_spec():
    return parse_spec_file(str(VU9P_PATH))


@pytest.fixture(scope="session")
def vu9p_path():
    return str(VU9P_PATH)


def build_toy4_hw():
    """Four multipliers, four memory blocks of 1024 x 36 bit words, 64 bit buses."""
    return HardwareSpec(
        resources=ResourceVector({"DSP": 4}),
        memory_blocks=4,
        block_capacity_bits=36864,
        port_widths_bits=(36,),
        max_bus_width_bits=64,
        frequency_hz=1e8,
    )


def build_toy4_dtype():
    return DataTypeSpec(
        name="word32",
        width_bits=32,
        unit_cost=ResourceVector({"DSP": 1}),
        pe_overhead=ResourceVector({"DSP": 0}),
        accumulation_latency=1,
        kind=INTEGER,
    )


@pytest.fixture
def toy4_hw():
    return build_toy4_hw()


@pytest.fixture
def toy4_dtype():
    return build_toy4_dtype()


@pytest.fixture
def unit_hw():
    """One block of two 36-bit words: just enough for a 1x1 output tile."""
    return HardwareSpec(
        resources=ResourceVector({"DSP": 1}),
        memory_blocks=1,
        block_capacity_bits=72,
        port_widths_bits=(36,),
        max_bus_width_bits=32,
        frequency_hz=1e8,
    )


@pytest.fixture
def float32_dtype():
    return DataTypeSpec(
        name="fp32",
        width_bits=32,
        unit_cost=ResourceVector({"DSP": 2}),
        pe_overhead=ResourceVector({"DSP": 0}),
        accumulation_latency=8,
        kind=FLOAT,
    )
