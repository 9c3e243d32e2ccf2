"""Raster-wide patch construction.

Every pixel's trajectories, samples and propagation candidates are built at
once, walking all rays of one direction in lockstep. The rules are those of
:mod:`edgemvs.core.deform.trajectories` and :mod:`edgemvs.core.deform.sampling`;
the unit tests check agreement pixel by pixel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.deform.sampling import mapping_offsets
from edgemvs.core.deform.trajectories import ray_offsets
from edgemvs.core.guidance.maps import GuidanceMaps
from edgemvs.core.model.errors import ConfigurationError

IntArray = NDArray[np.int64]

#: Square fallback patch: 11x11 window sampled every other pixel.
SQUARE_WINDOW = 11
SQUARE_STRIDE = 2
#: Fixed propagation pattern: distances 1 and 3 along the axes.
FIXED_PATTERN = ((-1, 0), (1, 0), (0, -1), (0, 1), (-3, 0), (3, 0), (0, -3), (0, 3))


@dataclass(eq=False)
class PatchSet:
    """Samples and propagation candidates for every pixel of one layer.

    ``sample_rows``/``sample_cols``/``sample_valid`` have shape (S, H, W);
    candidate arrays have shape (P, H, W).
    """

    sample_rows: NDArray[np.int16]
    sample_cols: NDArray[np.int16]
    sample_valid: NDArray[np.bool_]
    candidate_rows: NDArray[np.int16]
    candidate_cols: NDArray[np.int16]
    mean_length: NDArray[np.float64]

    @property
    def max_samples(self) -> int:
        return int(self.sample_rows.shape[0])

    @property
    def nbytes(self) -> int:
        arrays = (
            self.sample_rows,
            self.sample_cols,
            self.sample_valid,
            self.candidate_rows,
            self.candidate_cols,
            self.mean_length,
        )
        return sum(a.nbytes for a in arrays)

    def samples_at(self, row: int, col: int) -> list[tuple[int, int]]:
        valid = self.sample_valid[:, row, col]
        return list(
            zip(
                self.sample_rows[valid, row, col].tolist(),
                self.sample_cols[valid, row, col].tolist(),
                strict=True,
            )
        )

    def candidates_at(self, row: int, col: int) -> list[tuple[int, int]]:
        return list(
            zip(
                self.candidate_rows[:, row, col].tolist(),
                self.candidate_cols[:, row, col].tolist(),
                strict=True,
            )
        )


def _shifted(
    rows: IntArray, cols: IntArray, drow: int, dcol: int, height: int, width: int
) -> tuple[IntArray, IntArray, NDArray[np.bool_]]:
    r, c = rows + drow, cols + dcol
    inside = (r >= 0) & (r < height) & (c >= 0) & (c < width)
    return np.clip(r, 0, height - 1), np.clip(c, 0, width - 1), inside


def trace_lengths(
    guidance: GuidanceMaps, ray_count: int, max_radius: int, layer: int
) -> NDArray[np.int32]:
    """Trajectory lengths (X, H, W), origin included."""
    height, width = guidance.shape
    walls, continuous = guidance.walls, guidance.continuous
    budget = guidance.policy.budget_at(layer)
    rows, cols = np.indices((height, width))
    lengths = np.ones((ray_count, height, width), dtype=np.int32)

    for direction in range(ray_count):
        alive = np.ones((height, width), dtype=bool)
        started = np.zeros((height, width), dtype=bool)
        remaining = np.zeros((height, width), dtype=np.int64)
        for drow, dcol in ray_offsets(direction, ray_count, max_radius - 1).tolist():
            r, c, inside = _shifted(rows, cols, drow, dcol, height, width)
            alive &= inside & ~(started & (remaining == 0)) & ~walls[r, c]
            if not alive.any():
                break
            remaining[alive & started] -= 1
            starting = alive & ~started & continuous[r, c]
            started |= starting
            remaining[starting] = budget
            lengths[direction][alive] += 1
    return lengths


def sample_count_field(lengths: NDArray[np.int32]) -> NDArray[np.int64]:
    """Per-pixel n_i (X, H, W) in exact integer arithmetic."""
    ray_count = lengths.shape[0]
    lengths64 = lengths.astype(np.int64)
    total = lengths64.sum(axis=0)
    return -(-(2 * lengths64 * ray_count + total) // (2 * total))


def mapping_field(
    texture: NDArray[np.floating], walls: NDArray[np.bool_], window_size: int
) -> tuple[IntArray, IntArray]:
    """m_p for every pixel as (rows, cols) rasters."""
    height, width = texture.shape
    rows, cols = np.indices((height, width))
    half = window_size // 2
    reach: dict[tuple[int, int], NDArray[np.bool_]] = {(0, 0): np.ones((height, width), bool)}
    for ring in range(1, half + 1):
        for dr in range(-ring, ring + 1):
            for dc in range(-ring, ring + 1):
                if max(abs(dr), abs(dc)) != ring:
                    continue
                r, c, inside = _shifted(rows, cols, dr, dc, height, width)
                linked = np.zeros((height, width), dtype=bool)
                for a in (-1, 0, 1):
                    for b in (-1, 0, 1):
                        if max(abs(dr + a), abs(dc + b)) == ring - 1:
                            linked |= reach[(dr + a, dc + b)]
                reach[(dr, dc)] = inside & linked & ~walls[r, c]

    best_rows, best_cols = rows.copy(), cols.copy()
    best_value = texture.astype(np.float64).copy()
    for dr, dc in mapping_offsets(window_size)[1:]:
        r, c, _ = _shifted(rows, cols, dr, dc, height, width)
        value = texture[r, c]
        better = reach[(dr, dc)] & (value < best_value)
        best_rows[better], best_cols[better] = r[better], c[better]
        best_value[better] = value[better]
    return best_rows, best_cols


def _allocate(
    lengths: NDArray[np.int32],
    cost_field: NDArray[np.floating],
    map_rows: IntArray,
    map_cols: IntArray,
    ray_count: int,
) -> tuple[IntArray, IntArray, NDArray[np.bool_]]:
    _, height, width = lengths.shape
    rows, cols = np.indices((height, width))
    counts = sample_count_field(lengths)
    starts = np.cumsum(counts, axis=0) - counts
    capacity = (5 * ray_count) // 2
    best_cost = np.full((capacity, height, width), np.inf)
    best_rows = np.zeros((capacity, height, width), dtype=np.int64)
    best_cols = np.zeros((capacity, height, width), dtype=np.int64)
    filled = np.zeros((capacity, height, width), dtype=bool)
    mapped_cost = cost_field[map_rows, map_cols]

    steps = int(lengths.max())
    for direction in range(ray_count):
        length = lengths[direction].astype(np.int64)
        offsets = [(0, 0), *ray_offsets(direction, ray_count, steps - 1).tolist()]
        for step, (drow, dcol) in enumerate(offsets):
            active = step < length
            if not active.any():
                break
            r, c, _ = _shifted(rows, cols, drow, dcol, height, width)
            slot = starts[direction] + (step * counts[direction]) // length
            slot = np.where(active, slot, 0)
            cost = mapped_cost[r, c]
            current = best_cost[slot, rows, cols]
            better = active & (~filled[slot, rows, cols] | (cost < current))
            target = (slot[better], rows[better], cols[better])
            best_cost[target] = cost[better]
            best_rows[target] = map_rows[r, c][better]
            best_cols[target] = map_cols[r, c][better]
            filled[target] = True
    return best_rows, best_cols, filled


def trajectory_candidates(
    lengths: NDArray[np.int32], cost_field: NDArray[np.floating], ray_count: int
) -> tuple[IntArray, IntArray]:
    """Cheapest non-origin pixel on each pair of opposite rays, (X/2, H, W)."""
    if ray_count % 2:
        raise ConfigurationError(f"propagation pairs opposite rays; got {ray_count} rays")
    _, height, width = lengths.shape
    rows, cols = np.indices((height, width))
    half = ray_count // 2
    steps = int(lengths.max())
    out_rows = np.repeat(rows[None], half, axis=0)
    out_cols = np.repeat(cols[None], half, axis=0)
    for pair in range(half):
        best_cost = np.full((height, width), np.inf)
        best_index = rows * width + cols
        found = np.zeros((height, width), dtype=bool)
        for direction in (pair, pair + half):
            offsets = ray_offsets(direction, ray_count, max(steps - 1, 0)).tolist()
            for step, (drow, dcol) in enumerate(offsets, start=1):
                active = step < lengths[direction]
                if not active.any():
                    break
                r, c, _ = _shifted(rows, cols, drow, dcol, height, width)
                cost = cost_field[r, c]
                index = r * width + c
                better = active & (
                    ~found | (cost < best_cost) | ((cost == best_cost) & (index < best_index))
                )
                best_cost[better] = cost[better]
                best_index[better] = index[better]
                found |= better
        out_rows[pair], out_cols[pair] = np.divmod(best_index, width)
    return out_rows, out_cols


def fixed_candidates(shape: tuple[int, int]) -> tuple[IntArray, IntArray]:
    """The fixed eight-position pattern, clamped to the raster."""
    height, width = shape
    rows, cols = np.indices(shape)
    out_rows = np.empty((len(FIXED_PATTERN), height, width), dtype=np.int64)
    out_cols = np.empty_like(out_rows)
    for index, (drow, dcol) in enumerate(FIXED_PATTERN):
        r, c, inside = _shifted(rows, cols, drow, dcol, height, width)
        out_rows[index] = np.where(inside, r, rows)
        out_cols[index] = np.where(inside, c, cols)
    return out_rows, out_cols


def square_samples(shape: tuple[int, int]) -> tuple[IntArray, IntArray, NDArray[np.bool_]]:
    height, width = shape
    rows, cols = np.indices(shape)
    half = SQUARE_WINDOW // 2
    steps = range(-half, half + 1, SQUARE_STRIDE)
    offsets = [(dr, dc) for dr in steps for dc in steps]
    out_rows = np.empty((len(offsets), height, width), dtype=np.int64)
    out_cols = np.empty_like(out_rows)
    valid = np.empty((len(offsets), height, width), dtype=bool)
    for index, (drow, dcol) in enumerate(offsets):
        out_rows[index], out_cols[index], valid[index] = _shifted(
            rows, cols, drow, dcol, height, width
        )
    return out_rows, out_cols, valid


def build_patch_set(
    guidance: GuidanceMaps,
    cost_field: NDArray[np.floating],
    *,
    ray_count: int,
    max_radius: int,
    layer: int,
    texture: NDArray[np.floating] | None,
    window_size: int,
    deformation: bool = True,
    propagation: bool = True,
) -> PatchSet:
    """Patches for one layer.

    Args:
        guidance: Boundary/occlusion maps at this layer
        cost_field: Current aggregated cost per pixel
        ray_count: Rays per pixel
        max_radius: Trajectory cap, origin included
        layer: Pyramid layer (sets the crossing budget)
        texture: Textureness for mapping, or None to disable mapping
        window_size: Mapping window width
        deformation: False uses the square fallback patch
        propagation: False uses the fixed candidate pattern
    """
    shape = guidance.shape
    cost = np.nan_to_num(cost_field.astype(np.float64), nan=np.inf)
    lengths = trace_lengths(guidance, ray_count, max_radius, layer)

    if deformation:
        if texture is None:
            map_rows, map_cols = np.indices(shape)
        else:
            map_rows, map_cols = mapping_field(texture, guidance.walls, window_size)
        sample_rows, sample_cols, valid = _allocate(lengths, cost, map_rows, map_cols, ray_count)
        mean_length = lengths.mean(axis=0)
    else:
        sample_rows, sample_cols, valid = square_samples(shape)
        mean_length = np.full(shape, SQUARE_WINDOW // 2 + 1, dtype=np.float64)

    if propagation:
        cand_rows, cand_cols = trajectory_candidates(lengths, cost, ray_count)
    else:
        cand_rows, cand_cols = fixed_candidates(shape)

    return PatchSet(
        sample_rows=sample_rows.astype(np.int16),
        sample_cols=sample_cols.astype(np.int16),
        sample_valid=valid,
        candidate_rows=cand_rows.astype(np.int16),
        candidate_cols=cand_cols.astype(np.int16),
        mean_length=mean_length,
    )
