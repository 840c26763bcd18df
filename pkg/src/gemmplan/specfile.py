"""Parsing of the sectioned key=value hardware description files.

A file names one device and any number of data types:

    [hardware]
    resources = LUT:1033608, FF:2174048, DSP:6834
    memory_blocks = 1906
    block_capacity_bits = 36864
    port_widths_bits = 9, 18, 36, 72
    max_bus_width_bits = 512
    frequency_hz = 300e6

    [datatype.fp32]
    kind = float
    width_bits = 32
    unit_cost = LUT:650, FF:900, DSP:2
    pe_overhead = LUT:160, FF:700, DSP:0
    accumulation_latency = 8

    [defaults]            ; optional
    frequency_hz = 145.7e6
    layout = 1d

The schema is strict: unknown sections or keys are rejected so a typo cannot
silently fall back to a default.  `#` and `;` start comments.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import Dict, Optional

from .errors import SpecFileError
from .hardware import DataTypeSpec, HardwareSpec, ResourceVector, FLOAT, INTEGER

_HARDWARE_KEYS = {"resources", "memory_blocks", "block_capacity_bits",
                  "port_widths_bits", "max_bus_width_bits", "frequency_hz"}
_DATATYPE_KEYS = {"kind", "width_bits", "unit_cost", "pe_overhead",
                  "accumulation_latency"}
_DEFAULTS_KEYS = {"frequency_hz", "layout"}
_KIND_ALIASES = {"integer": INTEGER, "int": INTEGER, "float": FLOAT,
                 "floating-point": FLOAT}


@dataclass(frozen=True)
class SpecFile:
    hardware: HardwareSpec
    datatypes: Dict[str, DataTypeSpec] = field(default_factory=dict)
    default_frequency_hz: Optional[float] = None
    default_layout: str = "1d"

    def datatype(self, name: str) -> DataTypeSpec:
        try:
            return self.datatypes[name]
        except KeyError:
            raise SpecFileError(
                f"unknown data type {name!r}; file defines {sorted(self.datatypes)}") from None


class _Section:
    """One parsed section with schema checking and typed accessors."""

    def __init__(self, origin: str, name: str, items: Dict[str, str], allowed: set):
        self.origin = origin
        self.name = name
        self.items = items
        unknown = set(items) - allowed
        if unknown:
            raise SpecFileError(
                f"{origin}: section [{name}] has unknown keys {sorted(unknown)}; "
                f"allowed: {sorted(allowed)}")

    def _raw(self, key: str) -> str:
        try:
            return self.items[key]
        except KeyError:
            raise SpecFileError(f"{self.origin}: section [{self.name}] is missing key {key!r}") from None

    def get_int(self, key: str) -> int:
        raw = self._raw(key)
        try:
            return int(raw)
        except ValueError:
            raise SpecFileError(
                f"{self.origin}: [{self.name}] {key} = {raw!r} is not an integer") from None

    def get_float(self, key: str) -> float:
        raw = self._raw(key)
        try:
            return float(raw)
        except ValueError:
            raise SpecFileError(
                f"{self.origin}: [{self.name}] {key} = {raw!r} is not a number") from None

    def get_int_list(self, key: str) -> tuple:
        raw = self._raw(key)
        try:
            return tuple(int(part.strip()) for part in raw.split(",") if part.strip())
        except ValueError:
            raise SpecFileError(
                f"{self.origin}: [{self.name}] {key} = {raw!r} is not a list of integers") from None

    def get_resources(self, key: str, zero_kinds=None) -> ResourceVector:
        raw = self._raw(key)
        if zero_kinds is not None and raw.strip() in ("0", "none"):
            return ResourceVector.zeros(zero_kinds)
        try:
            return ResourceVector.parse(raw)
        except Exception as exc:
            raise SpecFileError(
                f"{self.origin}: [{self.name}] {key}: {exc}") from None

    def get_choice(self, key: str, choices: Dict[str, str]) -> str:
        raw = self._raw(key).strip().lower()
        if raw not in choices:
            raise SpecFileError(
                f"{self.origin}: [{self.name}] {key} = {raw!r}; expected one of "
                f"{sorted(set(choices))}")
        return choices[raw]


def parse_spec_text(text: str, origin: str = "<string>") -> SpecFile:
    parser = configparser.ConfigParser(
        interpolation=None, strict=True,
        comment_prefixes=("#", ";"), inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise SpecFileError(f"{origin}: {exc}") from None
    if parser.defaults():
        raise SpecFileError(f"{origin}: keys outside any section are not allowed")

    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    if "hardware" not in sections:
        raise SpecFileError(f"{origin}: missing required section [hardware]")

    hw_section = _Section(origin, "hardware", sections.pop("hardware"), _HARDWARE_KEYS)
    try:
        hardware = HardwareSpec(
            resources=hw_section.get_resources("resources"),
            memory_blocks=hw_section.get_int("memory_blocks"),
            block_capacity_bits=hw_section.get_int("block_capacity_bits"),
            port_widths_bits=hw_section.get_int_list("port_widths_bits"),
            max_bus_width_bits=hw_section.get_int("max_bus_width_bits"),
            frequency_hz=hw_section.get_float("frequency_hz"),
        )
    except SpecFileError:
        raise
    except Exception as exc:
        raise SpecFileError(f"{origin}: [hardware]: {exc}") from None

    datatypes: Dict[str, DataTypeSpec] = {}
    default_frequency = None
    default_layout = "1d"
    for name in list(sections):
        if name.startswith("datatype."):
            type_name = name[len("datatype."):]
            if not type_name:
                raise SpecFileError(f"{origin}: section [{name}] needs a type name after the dot")
            section = _Section(origin, name, sections.pop(name), _DATATYPE_KEYS)
            try:
                datatypes[type_name] = DataTypeSpec(
                    name=type_name,
                    width_bits=section.get_int("width_bits"),
                    unit_cost=section.get_resources("unit_cost"),
                    pe_overhead=section.get_resources(
                        "pe_overhead", zero_kinds=hardware.resources.kinds),
                    accumulation_latency=section.get_int("accumulation_latency"),
                    kind=section.get_choice("kind", _KIND_ALIASES),
                )
            except SpecFileError:
                raise
            except Exception as exc:
                raise SpecFileError(f"{origin}: [{name}]: {exc}") from None
    if "defaults" in sections:
        section = _Section(origin, "defaults", sections.pop("defaults"), _DEFAULTS_KEYS)
        if "frequency_hz" in section.items:
            default_frequency = section.get_float("frequency_hz")
        if "layout" in section.items:
            default_layout = section.get_choice("layout", {"1d": "1d", "2d": "2d"})
    if sections:
        raise SpecFileError(
            f"{origin}: unknown sections {sorted(sections)}; expected [hardware], "
            f"[datatype.<name>] and optionally [defaults]")
    return SpecFile(hardware=hardware, datatypes=datatypes,
                    default_frequency_hz=default_frequency,
                    default_layout=default_layout)


def parse_spec_file(path: str) -> SpecFile:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecFileError(f"cannot read {path}: {exc}") from None
    return parse_spec_text(text, origin=path)
