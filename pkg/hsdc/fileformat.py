from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from errors import CubeFormatError, DataError, TruncatedCubeError
from hsdc.cube import Datacube

MAGIC = b"HSDC"
FORMAT_VERSION = 1
# magic | version u32 | H, W, B u16 | 2 pad bytes | start f64 | step f64
_HEADER = struct.Struct("<4sI3H2xdd")
HEADER_SIZE = _HEADER.size
_MAX_DIM = 0xFFFF


def encode_datacube(cube: Datacube) -> bytes:
    if max(cube.shape) > _MAX_DIM:
        raise DataError(f"datacube dimensions must be <= {_MAX_DIM} (got {cube.shape})")
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        cube.height,
        cube.width,
        cube.bands,
        cube.wavelength_start_nm,
        cube.wavelength_step_nm,
    )
    # C order over (row, col, band) is band-interleaved-by-pixel.
    payload = np.ascontiguousarray(cube.values, dtype="<f4").tobytes()
    return header + payload


def decode_datacube(blob: bytes, source: str = "<bytes>") -> Datacube:
    if len(blob) < HEADER_SIZE:
        raise TruncatedCubeError(
            f"{source}: file has {len(blob)} bytes, header needs {HEADER_SIZE}"
        )
    magic, version, height, width, bands, start_nm, step_nm = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CubeFormatError(f"{source}: bad magic {magic!r} (expected {MAGIC!r})")
    if version != FORMAT_VERSION:
        raise CubeFormatError(f"{source}: unsupported format version {version}")
    expected = HEADER_SIZE + 4 * height * width * bands
    if len(blob) != expected:
        raise TruncatedCubeError(
            f"{source}: payload size mismatch (got {len(blob)} bytes, expected {expected})"
        )
    values = np.frombuffer(blob, dtype="<f4", offset=HEADER_SIZE)
    if not np.all(np.isfinite(values)):
        raise CubeFormatError(f"{source}: payload contains non-finite values")
    return Datacube(
        values.reshape(height, width, bands).astype(np.float64),
        start_nm,
        step_nm,
    )


def save_datacube(cube: Datacube, destination: Path | str) -> None:
    Path(destination).write_bytes(encode_datacube(cube))


def load_datacube(source: Path | str) -> Datacube:
    path = Path(source)
    return decode_datacube(path.read_bytes(), source=str(path))
