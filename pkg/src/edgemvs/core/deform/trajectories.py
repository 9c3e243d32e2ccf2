"""Multi-trajectory diffusion.

X rays leave a pixel at angles i * 360 / X degrees, measured counter-clockwise
from +x with rows growing downward. Each ray is a digital line advancing one
pixel per step along its major axis, so consecutive pixels are 8-adjacent and
the offset table depends only on the direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum
from functools import lru_cache
import math

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.guidance.maps import GuidanceMaps
from edgemvs.core.guidance.policy import CrossingKind, Pixel, crossing_allowance
from edgemvs.core.model.errors import ConfigurationError, ContractError


class StopReason(StrEnum):
    BOUNDARY = "boundary"
    BUDGET = "budget"
    RADIUS = "radius"
    BORDER = "border"


@dataclass(frozen=True)
class Trajectory:
    """Pixels visited by one ray, origin first; ``length`` counts the origin."""

    origin: Pixel
    direction: int
    pixels: tuple[Pixel, ...]
    stop: StopReason

    @property
    def length(self) -> int:
        return len(self.pixels)

    @property
    def endpoint(self) -> Pixel:
        return self.pixels[-1]


@lru_cache(maxsize=256)
def _offset_table(direction: int, ray_count: int, steps: int) -> NDArray[np.int64]:
    theta = 2 * math.pi * direction / ray_count
    cos, sin = math.cos(theta), math.sin(theta)
    major = max(abs(cos), abs(sin))
    k = np.arange(1, steps + 1, dtype=np.float64)
    cols = np.floor(k * cos / major + 0.5)
    rows = np.floor(-k * sin / major + 0.5)
    table = np.column_stack([rows, cols]).astype(np.int64)
    table.setflags(write=False)
    return table


def ray_offsets(direction: int, ray_count: int, steps: int) -> NDArray[np.int64]:
    """(row, col) offsets of steps 1..steps along ray ``direction``."""
    return _offset_table(direction, ray_count, steps)


def diffuse_trajectories(
    center: Pixel,
    ray_count: int,
    guidance: GuidanceMaps,
    max_radius: int,
    layer: int,
) -> list[Trajectory]:
    """Cast ``ray_count`` rays from ``center`` until an edge stops them.

    A ray stops before a Discontinuous boundary pixel, after ``epsilon(layer)``
    pixels past its first Continuous boundary pixel, at ``max_radius`` pixels
    (origin included) or at the raster border.

    Raises:
        ContractError: If ``center`` lies outside the raster
        ConfigurationError: If ``ray_count`` is below 4
    """
    height, width = guidance.shape
    row, col = center
    if not (0 <= row < height and 0 <= col < width):
        raise ContractError(f"center {center} is outside the {width}x{height} raster")
    if ray_count < 4:
        raise ConfigurationError(f"need at least 4 rays, got {ray_count}")

    trajectories = []
    for direction in range(ray_count):
        pixels: list[Pixel] = [center]
        started = False
        remaining = 0
        stop = StopReason.RADIUS
        for drow, dcol in ray_offsets(direction, ray_count, max_radius - 1).tolist():
            target = (row + drow, col + dcol)
            if not (0 <= target[0] < height and 0 <= target[1] < width):
                stop = StopReason.BORDER
                break
            if started and remaining == 0:
                stop = StopReason.BUDGET
                break
            crossing = crossing_allowance(
                guidance.policy, guidance.occlusion, pixels[-1], target, layer
            )
            if crossing.kind is CrossingKind.BLOCKED:
                stop = StopReason.BOUNDARY
                break
            if started:
                remaining -= 1
            elif crossing.kind is CrossingKind.WITHIN_BUDGET:
                started = True
                remaining = crossing.remaining or 0
            pixels.append(target)
        trajectories.append(Trajectory(center, direction, tuple(pixels), stop))
    return trajectories
