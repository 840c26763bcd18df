"""Strict parsing of the sectioned hardware description files."""

import pytest

from gemmplan.errors import SpecFileError
from gemmplan.hardware import FLOAT, INTEGER
from gemmplan.specfile import parse_spec_file, parse_spec_text

MINIMAL = """
[hardware]
resources = DSP:4
memory_blocks = 4
block_capacity_bits = 36864
port_widths_bits = 36
max_bus_width_bits = 64
frequency_hz = 1e8

[datatype.word32]
kind = integer
width_bits = 32
unit_cost = DSP:1
pe_overhead = none
accumulation_latency = 1
"""


def test_parse_shipped_device_file(vu9p_path):
    spec = parse_spec_file(str(vu9p_path))
    hw = spec.hardware
    assert hw.resources["LUT"] == 1033608
    assert hw.resources["FF"] == 2174048
    assert hw.resources["DSP"] == 6834
    assert hw.memory_blocks == 1906
    assert hw.block_capacity_bits == 36864
    assert hw.port_widths_bits == (9, 18, 36, 72)
    assert hw.max_bus_width_bits == 512
    assert hw.frequency_hz == 650e6
    assert sorted(spec.datatypes) == ["fp16", "fp32", "fp64",
                                      "uint16", "uint32", "uint8"]
    assert spec.default_frequency_hz == 200e6
    assert spec.default_layout == "1d"

    fp32 = spec.datatype("fp32")
    assert fp32.kind == FLOAT
    assert fp32.width_bits == 32
    assert fp32.unit_cost["LUT"] == 650
    assert fp32.pe_overhead["FF"] == 700
    assert fp32.accumulation_latency == 8
    uint8 = spec.datatype("uint8")
    assert uint8.kind == INTEGER
    assert uint8.accumulation_latency == 1


def test_parse_minimal_text():
    spec = parse_spec_text(MINIMAL)
    assert spec.hardware.memory_blocks == 4
    assert set(spec.hardware.resources.kinds) == {"DSP"}
    dt = spec.datatype("word32")
    assert dt.kind == INTEGER
    # "none" expands to an all-zero vector over the device's resource kinds
    assert dt.pe_overhead["DSP"] == 0
    assert spec.default_frequency_hz is None
    assert spec.default_layout == "1d"


def test_kind_aliases_accepted():
    for alias, kind in (("int", INTEGER), ("integer", INTEGER),
                        ("float", FLOAT), ("floating-point", FLOAT)):
        text = MINIMAL.replace("kind = integer", f"kind = {alias}")
        assert parse_spec_text(text).datatype("word32").kind == kind


def test_unknown_datatype_lists_available(vu9p_spec):
    with pytest.raises(SpecFileError, match="fp32"):
        vu9p_spec.datatype("fp128")


def test_missing_hardware_section_rejected():
    with pytest.raises(SpecFileError, match=r"\[hardware\]"):
        parse_spec_text("[datatype.x]\nkind = integer\n")


def test_unknown_section_rejected():
    with pytest.raises(SpecFileError, match="unknown sections"):
        parse_spec_text(MINIMAL + "\n[power]\nwatts = 5\n")


def test_unknown_key_names_section_and_key():
    with pytest.raises(SpecFileError) as err:
        parse_spec_text(MINIMAL + "\nvoltage = 3\n", origin="dev.ini")
    msg = str(err.value)
    assert "dev.ini" in msg
    assert "voltage" in msg
    assert "datatype.word32" in msg


def test_missing_key_named():
    text = MINIMAL.replace("memory_blocks = 4\n", "")
    with pytest.raises(SpecFileError, match="memory_blocks"):
        parse_spec_text(text)


def test_bad_integer_value_cites_key():
    text = MINIMAL.replace("memory_blocks = 4", "memory_blocks = four")
    with pytest.raises(SpecFileError, match="memory_blocks"):
        parse_spec_text(text)


def test_bad_kind_value_rejected():
    text = MINIMAL.replace("kind = integer", "kind = complex")
    with pytest.raises(SpecFileError, match="complex"):
        parse_spec_text(text)


def test_bad_resource_list_rejected():
    text = MINIMAL.replace("resources = DSP:4", "resources = DSP=4")
    with pytest.raises(SpecFileError, match="resources"):
        parse_spec_text(text)


def test_keys_outside_sections_rejected():
    with pytest.raises(SpecFileError):
        parse_spec_text("stray = 1\n" + MINIMAL)
    with pytest.raises(SpecFileError, match="outside"):
        parse_spec_text("[DEFAULT]\nstray = 1\n" + MINIMAL)


def test_empty_datatype_name_rejected():
    with pytest.raises(SpecFileError, match="type name"):
        parse_spec_text(MINIMAL.replace("[datatype.word32]", "[datatype.]"))


def test_invalid_hardware_values_wrapped():
    text = MINIMAL.replace("memory_blocks = 4", "memory_blocks = 0")
    with pytest.raises(SpecFileError, match=r"\[hardware\]"):
        parse_spec_text(text)


def test_defaults_validation():
    text = MINIMAL + "\n[defaults]\nlayout = ring\n"
    with pytest.raises(SpecFileError, match="layout"):
        parse_spec_text(text)
    text = MINIMAL + "\n[defaults]\nfrequency_hz = fast\n"
    with pytest.raises(SpecFileError, match="frequency_hz"):
        parse_spec_text(text)


def test_missing_file_reported():
    with pytest.raises(SpecFileError, match="no_such_device"):
        parse_spec_file("/nonexistent/no_such_device.ini")


def test_inline_comments_stripped():
    text = MINIMAL.replace("memory_blocks = 4", "memory_blocks = 4  ; four BRAMs")
    assert parse_spec_text(text).hardware.memory_blocks == 4
