"""Binary little-endian PLY point clouds (position, normal, uchar color)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from plyfile import PlyData, PlyElement

VERTEX_DTYPE = [
    ("x", "f4"),
    ("y", "f4"),
    ("z", "f4"),
    ("nx", "f4"),
    ("ny", "f4"),
    ("nz", "f4"),
    ("red", "u1"),
    ("green", "u1"),
    ("blue", "u1"),
]


def write_ply(
    path: str | Path,
    positions: NDArray[np.floating],
    normals: NDArray[np.floating],
    colors: NDArray[np.integer],
) -> None:
    """Write N points; ``colors`` is (N, 3) in [0, 255]."""
    vertices = np.empty(len(positions), dtype=VERTEX_DTYPE)
    for axis, name in enumerate("xyz"):
        vertices[name] = positions[:, axis]
        vertices[f"n{name}"] = normals[:, axis]
    for channel, name in enumerate(("red", "green", "blue")):
        vertices[name] = np.clip(colors[:, channel], 0, 255)
    element = PlyElement.describe(vertices, "vertex")
    PlyData([element], text=False, byte_order="<").write(str(path))


def read_ply(
    path: str | Path,
) -> tuple[NDArray[np.float32], NDArray[np.float32], NDArray[np.uint8]]:
    """Positions, normals and colors of a cloud written by :func:`write_ply`."""
    vertex = PlyData.read(str(path))["vertex"]
    positions = np.column_stack([vertex[name] for name in ("x", "y", "z")])
    normals = np.column_stack([vertex[name] for name in ("nx", "ny", "nz")])
    colors = np.column_stack([vertex[name] for name in ("red", "green", "blue")])
    return positions.astype(np.float32), normals.astype(np.float32), colors.astype(np.uint8)
