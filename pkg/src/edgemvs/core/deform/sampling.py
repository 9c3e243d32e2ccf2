"""Sample allocation, texture-aware mapping and propagation candidates.

Per-pixel reference implementations. The solver runs the raster-wide
equivalents in :mod:`edgemvs.core.deform.kernels`, which are tested against
these.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.deform.trajectories import Trajectory, diffuse_trajectories
from edgemvs.core.guidance.maps import GuidanceMaps
from edgemvs.core.guidance.policy import Pixel
from edgemvs.core.model.errors import ConfigurationError


@dataclass(frozen=True)
class Sample:
    """A selected pixel and the fragment it represents."""

    pixel: Pixel
    trajectory: int
    fragment: int


@dataclass(frozen=True)
class DeformedPatch:
    center: Pixel
    trajectories: tuple[Trajectory, ...]
    samples: tuple[Sample, ...]

    @property
    def sample_pixels(self) -> list[Pixel]:
        return [s.pixel for s in self.samples]

    @property
    def mean_length(self) -> float:
        return float(np.mean([t.length for t in self.trajectories]))


def sample_counts(lengths: Sequence[int]) -> list[int]:
    """n_i = ceil(l_i / mean(l) + 1/2), computed in exact integer arithmetic."""
    total = sum(lengths)
    count = len(lengths)
    # ceil((2 * l * X + S) / (2 * S))
    return [-(-(2 * length * count + total) // (2 * total)) for length in lengths]


def fragment_bounds(length: int, pieces: int) -> list[tuple[int, int]]:
    """Split ``length`` pixels into ``pieces`` near-equal runs, longer runs first."""
    bounds = [-(-j * length // pieces) for j in range(pieces + 1)]
    return [(bounds[j], bounds[j + 1]) for j in range(pieces)]


def fragment_of(step: int, length: int, pieces: int) -> int:
    """Fragment holding pixel ``step`` under :func:`fragment_bounds`."""
    return step * pieces // length


def mapping_offsets(window_size: int) -> list[tuple[int, int]]:
    """Window offsets ordered nearest first, then by (row, col)."""
    half = window_size // 2
    offsets = [(dr, dc) for dr in range(-half, half + 1) for dc in range(-half, half + 1)]
    return sorted(offsets, key=lambda o: (o[0] ** 2 + o[1] ** 2, o[0], o[1]))


def reachable_window(
    pixel: Pixel, walls: NDArray[np.bool_], window_size: int
) -> dict[tuple[int, int], bool]:
    """Which window offsets are reachable from ``pixel`` without touching a wall.

    An offset at ring r (Chebyshev distance) is reachable when it is inside
    the raster, not a wall, and 8-adjacent to a reachable offset at ring r - 1.
    The center itself is always reachable.
    """
    height, width = walls.shape
    half = window_size // 2
    reach = {(0, 0): True}
    for ring in range(1, half + 1):
        for dr in range(-ring, ring + 1):
            for dc in range(-ring, ring + 1):
                if max(abs(dr), abs(dc)) != ring:
                    continue
                row, col = pixel[0] + dr, pixel[1] + dc
                inside = 0 <= row < height and 0 <= col < width
                linked = any(
                    reach.get((dr + a, dc + b), False)
                    for a in (-1, 0, 1)
                    for b in (-1, 0, 1)
                    if max(abs(dr + a), abs(dc + b)) == ring - 1
                )
                reach[(dr, dc)] = inside and linked and not walls[row, col]
    return reach


def mapping_pixel(
    pixel: Pixel, texture: NDArray[np.floating], walls: NDArray[np.bool_], window_size: int
) -> Pixel:
    """m_p: the reachable window pixel with the smallest textureness."""
    reach = reachable_window(pixel, walls, window_size)
    best = pixel
    best_value = float(texture[pixel])
    for dr, dc in mapping_offsets(window_size):
        if not reach[(dr, dc)]:
            continue
        candidate = (pixel[0] + dr, pixel[1] + dc)
        value = float(texture[candidate])
        if value < best_value:
            best, best_value = candidate, value
    return best


def allocate_samples(
    trajectories: Sequence[Trajectory],
    cost_field: NDArray[np.floating],
    texture: NDArray[np.floating] | None,
    window_size: int,
    guidance: GuidanceMaps,
) -> list[Sample]:
    """One representative per non-empty fragment of every trajectory.

    Each fragment pixel q is first replaced by its mapping pixel m_q (skipped
    when ``texture`` is None); the fragment's sample is the m_q with the
    smallest cost, ties going to the earliest pixel of the fragment.
    """
    counts = sample_counts([t.length for t in trajectories])
    walls = guidance.walls
    mapped: dict[Pixel, Pixel] = {}

    def mapped_pixel(q: Pixel) -> Pixel:
        if texture is None:
            return q
        if q not in mapped:
            mapped[q] = mapping_pixel(q, texture, walls, window_size)
        return mapped[q]

    samples = []
    for index, (trajectory, pieces) in enumerate(zip(trajectories, counts, strict=True)):
        for fragment, (start, stop) in enumerate(fragment_bounds(trajectory.length, pieces)):
            if start == stop:
                continue
            best = mapped_pixel(trajectory.pixels[start])
            best_cost = float(cost_field[best])
            for q in trajectory.pixels[start + 1 : stop]:
                m = mapped_pixel(q)
                if float(cost_field[m]) < best_cost:
                    best, best_cost = m, float(cost_field[m])
            samples.append(Sample(best, index, fragment))
    return samples


def propagation_candidates(
    trajectories: Sequence[Trajectory], cost_field: NDArray[np.floating]
) -> list[Pixel]:
    """Cheapest pixel on each combined trajectory (a ray plus its opposite).

    The shared origin is excluded unless both rays have length 1. Ties go to
    the smallest (row, col).

    Raises:
        ConfigurationError: If the number of trajectories is odd
    """
    count = len(trajectories)
    if count % 2:
        raise ConfigurationError(f"propagation pairs opposite rays; got {count} trajectories")
    half = count // 2
    candidates = []
    for i in range(half):
        pixels = trajectories[i].pixels[1:] + trajectories[i + half].pixels[1:]
        if not pixels:
            candidates.append(trajectories[i].origin)
            continue
        candidates.append(min(pixels, key=lambda q: (float(cost_field[q]), q)))
    return candidates


def build_patch(
    center: Pixel,
    ray_count: int,
    guidance: GuidanceMaps,
    max_radius: int,
    layer: int,
    cost_field: NDArray[np.floating],
    texture: NDArray[np.floating] | None,
    window_size: int,
) -> DeformedPatch:
    """Trajectories and samples for one pixel (the patch-debug path)."""
    trajectories = diffuse_trajectories(center, ray_count, guidance, max_radius, layer)
    samples = allocate_samples(trajectories, cost_field, texture, window_size, guidance)
    return DeformedPatch(center, tuple(trajectories), tuple(samples))
