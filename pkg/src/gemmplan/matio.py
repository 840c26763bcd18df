"""Matrix serialization and reproducible test-data generation.

File layout (little-endian throughout):

    offset  size  field
    0       4     magic b"GPMX"
    4       4     element kind: 1 = integer, 2 = float (uint32)
    8       4     element width in bits (uint32)
    12      8     rows (uint64)
    20      8     cols (uint64)
    28      ...   payload, row-major, in the smallest standard container
                  holding the width (uint8/16/32/64 or float16/32/64)

Integer payloads are stored masked to the element width, so a file holds the
same values the simulator computes with.
"""

from __future__ import annotations

import struct
from typing import Union

import numpy as np

from .errors import ConfigurationError
from .hardware import FLOAT, INTEGER
from .simulator import ElementType, MatrixBuffer

MAGIC = b"GPMX"
_HEADER = struct.Struct("<4sIIQQ")
_KIND_CODES = {INTEGER: 1, FLOAT: 2}
_CODE_KINDS = {code: kind for kind, code in _KIND_CODES.items()}


def _container_dtype(etype: ElementType) -> np.dtype:
    if etype.kind == FLOAT:
        return np.dtype(etype.dtype).newbyteorder("<")
    for bits in (8, 16, 32, 64):
        if etype.width_bits <= bits:
            return np.dtype(f"uint{bits}").newbyteorder("<")
    raise ConfigurationError(f"no container for width {etype.width_bits}")


def save_matrix(path: str, buf: MatrixBuffer) -> None:
    header = _HEADER.pack(MAGIC, _KIND_CODES[buf.etype.kind], buf.etype.width_bits,
                          buf.rows, buf.cols)
    payload = np.ascontiguousarray(buf.data.astype(_container_dtype(buf.etype)))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def load_matrix(path: str) -> MatrixBuffer:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ConfigurationError(f"{path}: truncated header")
    magic, kind_code, width, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ConfigurationError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if kind_code not in _CODE_KINDS:
        raise ConfigurationError(f"{path}: unknown element kind code {kind_code}")
    etype = ElementType(_CODE_KINDS[kind_code], width)
    dtype = _container_dtype(etype)
    expected = rows * cols * dtype.itemsize
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise ConfigurationError(
            f"{path}: payload is {len(payload)} bytes, expected {expected} "
            f"for {rows}x{cols} x {dtype.itemsize} bytes")
    data = np.frombuffer(payload, dtype=dtype).reshape(rows, cols)
    return MatrixBuffer(data, etype)


def random_matrix(rows: int, cols: int, etype: ElementType,
                  seed: Union[int, np.random.Generator]) -> MatrixBuffer:
    """Reproducible matrix from a seed.

    Generator contract, stable across runs: a fresh
    ``numpy.random.default_rng(seed)`` draws the full matrix in one call,
    row-major.  Integers are uniform over [0, 2**width); floats are standard
    normal samples cast to the target precision.
    """
    if rows < 1 or cols < 1:
        raise ConfigurationError("matrix extents must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if etype.kind == INTEGER:
        high = (1 << etype.width_bits) - 1
        data = rng.integers(0, high, size=(rows, cols), dtype=np.uint64, endpoint=True)
    else:
        data = rng.standard_normal((rows, cols)).astype(etype.dtype)
    return MatrixBuffer(data, etype)
