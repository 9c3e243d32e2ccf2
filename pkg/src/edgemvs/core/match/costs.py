"""Geometric, color and supervision terms and their weighted aggregation.

All term functions are vectorized over N pixels. Before weighting, the
matching cost is halved and the truncated pixel errors are divided by the
truncation so that every term lies in [0, 1].
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.match.photometric import MAX_COST, bilinear
from edgemvs.core.model.camera import CameraModel, FloatArray
from edgemvs.core.model.hypothesis import CostWeights

_MIN_Z = 1e-12
#: Full-scale intensity; color gradients are taken on images scaled to [0, 1].
INTENSITY_SCALE = 255.0


def instance_laplacian(
    image: NDArray[np.floating], segmentation: NDArray[np.integer]
) -> FloatArray:
    """4-neighbour Laplacian of ``image / 255``, undefined (NaN) across instances.

    Pixels with a 4-neighbour of another segmentation label are NaN, as are
    the outermost rows and columns, so no value mixes two surfaces or
    depends on where the raster edge cuts the scene.
    """
    scaled = image.astype(np.float64) / INTENSITY_SCALE
    labels = np.asarray(segmentation)
    height, width = scaled.shape
    result = np.full(scaled.shape, np.nan)
    if min(height, width) < 3:
        return result
    center = scaled[1:-1, 1:-1]
    inside = labels[1:-1, 1:-1]
    total = np.zeros_like(center)
    uniform = np.ones(center.shape, dtype=bool)
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        window = (slice(1 + dr, height - 1 + dr), slice(1 + dc, width - 1 + dc))
        total += scaled[window] - center
        uniform &= labels[window] == inside
    result[1:-1, 1:-1] = np.where(uniform, total, np.nan)
    return result


def multi_scale_cost(costs: Sequence[FloatArray | float]) -> FloatArray:
    """Mean of the current layer's cost and every coarser layer's, per pixel."""
    return np.mean(np.stack([np.asarray(c, dtype=np.float64) for c in costs]), axis=0)


def project_to_source(
    ref_camera: CameraModel,
    src_camera: CameraModel,
    pixels: FloatArray,
    depth: FloatArray,
) -> tuple[FloatArray, FloatArray]:
    """Source pixels (N, 2) and source depths (N,) of reference pixels at ``depth``."""
    R_rel, t_rel = ref_camera.relative_to(src_camera)
    points = ref_camera.rays(pixels) * depth[:, None]
    in_src = points @ R_rel.T + t_rel
    z = in_src[:, 2]
    safe_z = np.where(z > _MIN_Z, z, 1.0)
    projected = (in_src @ src_camera.K.T)[:, :2] / safe_z[:, None]
    return projected, z


def reprojection_error(
    pixels: FloatArray,
    depth: FloatArray,
    ref_camera: CameraModel,
    src_camera: CameraModel,
    src_depth: FloatArray,
    truncation: float,
) -> FloatArray:
    """min(|p' - p|, tau) after a round trip through the source depth map.

    The source depth is looked up at the nearest pixel to the projection;
    projections outside the source raster or onto invalid source depth
    score ``truncation``.
    """
    projected, z = project_to_source(ref_camera, src_camera, pixels, depth)
    cols = np.rint(projected[:, 0])
    rows = np.rint(projected[:, 1])
    inside = (
        (z > _MIN_Z)
        & (cols >= 0)
        & (cols < src_camera.width)
        & (rows >= 0)
        & (rows < src_camera.height)
    )
    r = np.where(inside, rows, 0).astype(np.int64)
    c = np.where(inside, cols, 0).astype(np.int64)
    src_d = src_depth[r, c]
    usable = inside & (src_d > 0) & np.isfinite(src_d)

    R_rel, t_rel = ref_camera.relative_to(src_camera)
    back = src_camera.rays(projected) * np.where(usable, src_d, 1.0)[:, None]
    in_ref = (back - t_rel) @ R_rel
    z_ref = in_ref[:, 2]
    usable &= z_ref > _MIN_Z
    returned = (in_ref @ ref_camera.K.T)[:, :2] / np.where(usable, z_ref, 1.0)[:, None]
    distance = np.linalg.norm(returned - pixels, axis=1)
    return np.where(usable, np.minimum(distance, truncation), truncation)


def color_gaps(
    ref_laplacian: FloatArray,
    src_laplacian: FloatArray,
    ref_pixels: NDArray[np.integer],
    src_pixels: FloatArray,
    truncation: float,
    in_front: NDArray[np.bool_] | None = None,
) -> tuple[FloatArray, NDArray[np.bool_]]:
    """Truncated gaps |L_ref(p) - L_src(p_j)| and whether each is usable.

    ``p_j`` is sampled bilinearly. A gap is unusable, and set to ``truncation``,
    when the projection leaves the source raster or lies behind the camera,
    or when either Laplacian is undefined (NaN) there.

    Args:
        ref_laplacian: Laplacian of the reference image
        src_laplacian: Laplacian of the source image
        ref_pixels: (N, 2) integer (row, col) reference pixels
        src_pixels: (N, 2) projected (u, v) source coordinates
        truncation: tau
        in_front: Projection lies in front of the source camera; all True if None
    """
    height, width = src_laplacian.shape
    u, v = src_pixels[:, 0], src_pixels[:, 1]
    usable = np.isfinite(u) & np.isfinite(v) & (u >= 0) & (u <= width - 1)
    usable &= (v >= 0) & (v <= height - 1)
    if in_front is not None:
        usable &= in_front
    ref_values = ref_laplacian[ref_pixels[:, 0], ref_pixels[:, 1]]
    src_values = bilinear(src_laplacian, u, v)
    usable &= np.isfinite(ref_values) & np.isfinite(src_values)
    gap = np.minimum(np.abs(np.where(usable, ref_values - src_values, 0.0)), truncation)
    return np.where(usable, gap, truncation), usable


def color_gradient_error(
    ref_laplacian: FloatArray,
    src_laplacian: FloatArray,
    ref_pixels: NDArray[np.integer],
    src_pixels: FloatArray,
    truncation: float,
    in_front: NDArray[np.bool_] | None = None,
) -> FloatArray:
    """min(|L_ref(p) - L_src(p_j)|, tau) per pixel; see :func:`color_gaps`."""
    gap, _ = color_gaps(
        ref_laplacian, src_laplacian, ref_pixels, src_pixels, truncation, in_front
    )
    return gap


def patch_color_error(
    gaps: FloatArray,
    weights: FloatArray,
    usable: NDArray[np.bool_],
    truncation: float,
) -> FloatArray:
    """Weighted mean over each (S, N) column of usable gaps; tau if none is usable."""
    w = np.where(usable, weights, 0.0)
    total = w.sum(axis=0)
    mean = (w * gaps).sum(axis=0) / np.where(total > 0, total, 1.0)
    return np.where(total > 0, mean, truncation)


def depth_difference_error(
    estimate: FloatArray | float, restored: FloatArray | float, tolerance: float
) -> NDArray[np.float64]:
    """1 where |d - d'| / d' exceeds ``tolerance``; 0 where d' is invalid."""
    estimate = np.asarray(estimate, dtype=np.float64)
    restored = np.asarray(restored, dtype=np.float64)
    valid = restored > 0
    safe = np.where(valid, restored, 1.0)
    outside = np.abs(estimate - restored) / safe > tolerance
    return (valid & outside).astype(np.float64)


def normalized_terms(
    matching: FloatArray,
    reprojection: FloatArray,
    color: FloatArray,
    depth: FloatArray,
    truncation: float,
) -> FloatArray:
    """Stack the four terms in weight order, each scaled into [0, 1]."""
    return np.stack(
        [
            np.asarray(matching) / MAX_COST,
            np.asarray(reprojection) / truncation,
            np.asarray(color) / truncation,
            np.asarray(depth, dtype=np.float64),
        ]
    )


def aggregated_cost(terms: FloatArray, weights: CostWeights) -> FloatArray:
    """Weighted sum over the leading axis of normalized ``terms``."""
    return np.tensordot(weights.as_array(), np.asarray(terms, dtype=np.float64), axes=1)


def best_views(costs: FloatArray, keep: int) -> NDArray[np.bool_]:
    """Mask (S, N) of the ``keep`` cheapest sources per pixel, ties by index."""
    order = np.argsort(costs, axis=0, kind="stable")
    selected = np.zeros(costs.shape, dtype=bool)
    np.put_along_axis(selected, order[:keep], True, axis=0)
    return selected
