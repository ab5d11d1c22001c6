"""CTEN binary tensor format.

Layout: magic ``CTEN``, u8 rank, rank x u32 dims (little-endian), u8 dtype
code (0 = f32, 1 = f64), raw row-major little-endian payload.
"""
import struct
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from tensor_core.exceptions import FormatError

MAGIC = b"CTEN"
DTYPE_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}
CODE_DTYPES = {code: dtype for dtype, code in DTYPE_CODES.items()}


def write_array(stream: BinaryIO, values: np.ndarray) -> None:
    values = np.asarray(values)
    dtype = values.dtype.newbyteorder("<")
    if dtype not in DTYPE_CODES:
        raise FormatError(f"unsupported dtype for CTEN: {values.dtype}")
    if values.ndim > 255:
        raise FormatError(f"rank {values.ndim} does not fit in a u8")
    stream.write(MAGIC)
    stream.write(struct.pack("<B", values.ndim))
    stream.write(struct.pack(f"<{values.ndim}I", *values.shape))
    stream.write(struct.pack("<B", DTYPE_CODES[dtype]))
    stream.write(np.ascontiguousarray(values, dtype=dtype).tobytes())


def _read_exact(stream: BinaryIO, size: int) -> bytes:
    chunk = stream.read(size)
    if len(chunk) != size:
        raise FormatError(
            f"truncated CTEN record: wanted {size} bytes, got {len(chunk)}"
        )
    return chunk


def read_array(stream: BinaryIO) -> np.ndarray:
    if _read_exact(stream, 4) != MAGIC:
        raise FormatError("missing CTEN magic")
    (rank,) = struct.unpack("<B", _read_exact(stream, 1))
    dims = struct.unpack(f"<{rank}I", _read_exact(stream, 4 * rank))
    (code,) = struct.unpack("<B", _read_exact(stream, 1))
    if code not in CODE_DTYPES:
        raise FormatError(f"unknown CTEN dtype code {code}")
    dtype = CODE_DTYPES[code]
    count = int(np.prod(dims, dtype=np.int64))
    payload = _read_exact(stream, count * dtype.itemsize)
    return np.frombuffer(payload, dtype=dtype).reshape(dims).copy()


def save_array(path: Union[str, Path], values: np.ndarray) -> None:
    with open(path, "wb") as stream:
        write_array(stream, values)


def load_array(path: Union[str, Path]) -> np.ndarray:
    with open(path, "rb") as stream:
        return read_array(stream)
