"""PFM depth and normal rasters.

Little-endian float32 with a negative scale header; rows are stored bottom to
top on disk and flipped on read, so callers always see row 0 at the top.
Invalid depth is encoded as -1.0. Writing float32 data and reading it back
reproduces every value bit for bit.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.model.errors import RasterFormatError

INVALID = -1.0

_MONO = b"Pf"
_COLOR = b"PF"


def write_pfm(data: NDArray[np.floating], path: str | Path) -> None:
    """Write a (H, W) or (H, W, 3) float32 raster.

    Other dtypes are refused rather than narrowed, so a float64 caller casts
    with ``astype(np.float32)`` where the precision loss is visible.

    Raises:
        RasterFormatError: On NaN/inf values, an unsupported shape or a
            dtype other than float32
        OSError: If the path is not writable
    """
    array = np.asarray(data)
    if array.ndim == 2:
        tag = _MONO
    elif array.ndim == 3 and array.shape[2] == 3:
        tag = _COLOR
    else:
        raise RasterFormatError(f"{path}: PFM needs (H, W) or (H, W, 3), got {array.shape}")
    if not np.isfinite(array).all():
        raise RasterFormatError(f"{path}: non-finite values; use {INVALID} for invalid pixels")
    if array.dtype != np.float32:
        raise RasterFormatError(f"{path}: PFM stores float32, got {array.dtype}; cast first")

    height, width = array.shape[:2]
    payload = np.ascontiguousarray(np.flipud(array), dtype="<f4")
    with open(path, "wb") as f:
        f.write(tag + b"\n")
        f.write(f"{width} {height}\n".encode())
        f.write(b"-1.0\n")
        f.write(payload.tobytes())


def read_pfm(path: str | Path) -> NDArray[np.float32]:
    """Read a PFM written by :func:`write_pfm` (or any conforming writer).

    Raises:
        FileNotFoundError: If the file does not exist
        RasterFormatError: On a malformed header or truncated payload
    """
    with open(path, "rb") as f:
        tag = f.readline().rstrip()
        dims = f.readline().split()
        scale_line = f.readline().strip()
        body = f.read()

    if tag not in (_MONO, _COLOR):
        raise RasterFormatError(f"{path}: not a PFM file (header {tag!r})")
    try:
        width, height = int(dims[0]), int(dims[1])
        scale = float(scale_line)
    except (IndexError, ValueError):
        raise RasterFormatError(f"{path}: malformed PFM header") from None

    channels = 3 if tag == _COLOR else 1
    dtype = "<f4" if scale < 0 else ">f4"
    expected = width * height * channels * 4
    if len(body) < expected:
        raise RasterFormatError(f"{path}: truncated PFM payload")

    array = np.frombuffer(body[:expected], dtype=dtype).astype(np.float32)
    shape = (height, width, 3) if channels == 3 else (height, width)
    return np.flipud(array.reshape(shape)).copy()


def write_depth_map(depth: NDArray[np.floating], path: str | Path) -> None:
    """Depth raster to PFM; NaN is rejected, invalid pixels must already be -1.

    Float64 depth is narrowed to float32 here, the precision PFM stores.
    """
    write_pfm(np.asarray(depth).astype(np.float32), path)


def read_depth_map(path: str | Path) -> NDArray[np.float32]:
    return read_pfm(path)
