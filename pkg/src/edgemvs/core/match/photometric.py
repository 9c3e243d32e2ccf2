"""Bilateral-weighted NCC between a reference patch and its plane-induced warp."""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from edgemvs.core.deform.sampling import DeformedPatch
from edgemvs.core.model.camera import CameraModel, FloatArray
from edgemvs.core.model.hypothesis import Hypothesis
from edgemvs.core.model.scene import ViewBundle

#: Cost given to hypotheses that cannot be scored.
MAX_COST = 2.0
MIN_SAMPLES = 4
#: Variance below which a patch is treated as flat.
MIN_VARIANCE = 1e-5
_MIN_Z = 1e-12


def plane_homographies(
    ref_camera: CameraModel,
    src_camera: CameraModel,
    pixels: FloatArray,
    depth: FloatArray,
    normal: FloatArray,
) -> FloatArray:
    """Homographies (N, 3, 3) induced by the plane of each hypothesis.

    The plane through ``depth * K^-1 p`` with camera-frame ``normal`` maps
    reference pixels to source pixels by ``K_s (R - t n^T / rho) K_r^-1``
    with ``rho = -depth * n . (K_r^-1 p)``.
    """
    R_rel, t_rel = ref_camera.relative_to(src_camera)
    rays = ref_camera.rays(pixels)
    rho = -depth * np.sum(normal * rays, axis=1)
    rho = np.where(np.abs(rho) > _MIN_Z, rho, _MIN_Z)
    inner = R_rel[None] - t_rel[None, :, None] * normal[:, None, :] / rho[:, None, None]
    return src_camera.K[None] @ inner @ ref_camera.K_inv[None]


def warp_points(
    homographies: FloatArray,
    rows: NDArray[np.integer],
    cols: NDArray[np.integer],
    src_shape: tuple[int, int],
) -> tuple[FloatArray, FloatArray, NDArray[np.bool_]]:
    """Map (S, N) sample pixels through per-column homographies.

    Returns source (u, v) and whether each lands inside the source raster
    in front of the camera.
    """
    H = homographies
    r = rows.astype(np.float64)
    c = cols.astype(np.float64)
    x = H[:, 0, 0] * c + H[:, 0, 1] * r + H[:, 0, 2]
    y = H[:, 1, 0] * c + H[:, 1, 1] * r + H[:, 1, 2]
    z = H[:, 2, 0] * c + H[:, 2, 1] * r + H[:, 2, 2]
    front = z > _MIN_Z
    safe_z = np.where(front, z, 1.0)
    u, v = x / safe_z, y / safe_z
    height, width = src_shape
    inside = front & (u >= 0) & (u <= width - 1) & (v >= 0) & (v <= height - 1)
    return u, v, inside


def bilinear(image: FloatArray, u: FloatArray, v: FloatArray) -> FloatArray:
    """Bilinear lookup at (u, v); coordinates outside are clamped."""
    coords = np.stack([np.nan_to_num(v), np.nan_to_num(u)])
    return ndimage.map_coordinates(image, coords, order=1, mode="nearest")


def bilateral_weights(
    ref_values: FloatArray,
    center_values: FloatArray,
    offsets_sq: FloatArray,
    sigma_spatial: FloatArray,
    sigma_intensity: float,
) -> FloatArray:
    """exp(-dist^2 / 2 s_s^2 - dI^2 / 2 s_i^2) for (S, N) samples."""
    spatial = offsets_sq / (2.0 * sigma_spatial**2)
    tonal = (ref_values - center_values) ** 2 / (2.0 * sigma_intensity**2)
    return np.exp(-spatial - tonal)


def weighted_ncc_cost(
    ref_values: FloatArray,
    src_values: FloatArray,
    weights: FloatArray,
    mask: NDArray[np.bool_],
) -> FloatArray:
    """1 - weighted NCC per column of (S, N) samples, in [0, 2].

    Columns with fewer than MIN_SAMPLES masked samples score MAX_COST. So does
    a column where either side is flat (weighted variance below MIN_VARIANCE):
    NCC is undefined there and the cost is 2, not the 1 of zero correlation.
    """
    w = np.where(mask, weights, 0.0)
    total = w.sum(axis=0)
    enough = (mask.sum(axis=0) >= MIN_SAMPLES) & (total > 0)
    safe_total = np.where(enough, total, 1.0)
    mean_a = (w * ref_values).sum(axis=0) / safe_total
    mean_b = (w * src_values).sum(axis=0) / safe_total
    da = ref_values - mean_a
    db = src_values - mean_b
    var_a = (w * da * da).sum(axis=0) / safe_total
    var_b = (w * db * db).sum(axis=0) / safe_total
    cov = (w * da * db).sum(axis=0) / safe_total
    textured = enough & (var_a >= MIN_VARIANCE) & (var_b >= MIN_VARIANCE)
    denominator = np.sqrt(np.where(textured, var_a * var_b, 1.0))
    cost = 1.0 - cov / denominator
    return np.where(textured, np.clip(cost, 0.0, MAX_COST), MAX_COST)


def patch_costs(
    ref_image: FloatArray,
    src_image: FloatArray,
    homographies: FloatArray,
    sample_rows: NDArray[np.integer],
    sample_cols: NDArray[np.integer],
    sample_valid: NDArray[np.bool_],
    weights: FloatArray,
) -> FloatArray:
    """Photometric cost for (S, N) samples given precomputed bilateral weights."""
    u, v, inside = warp_points(homographies, sample_rows, sample_cols, src_image.shape)
    mask = sample_valid & inside
    ref_values = ref_image[sample_rows, sample_cols]
    src_values = bilinear(src_image, u, v)
    return weighted_ncc_cost(ref_values, src_values, weights, mask)


def photometric_cost(
    ref_view: ViewBundle,
    src_view: ViewBundle,
    hypothesis: Hypothesis,
    patch: DeformedPatch,
    sigma_intensity: float = 10.0,
) -> float:
    """Cost in [0, 2] of one hypothesis at the patch center.

    The center pixel is prepended to the patch samples. Spatial bilateral
    sigma is half the patch's mean trajectory length, at least 1 pixel.
    """
    row, col = patch.center
    pixels = [(row, col), *patch.sample_pixels]
    rows = np.array([p[0] for p in pixels], dtype=np.int64)[:, None]
    cols = np.array([p[1] for p in pixels], dtype=np.int64)[:, None]
    image = ref_view.image.astype(np.float64)

    H = plane_homographies(
        ref_view.camera,
        src_view.camera,
        np.array([[col, row]], dtype=np.float64),
        np.array([hypothesis.depth]),
        np.array([hypothesis.normal], dtype=np.float64),
    )
    sigma_spatial = np.array([max(1.0, patch.mean_length / 2.0)])
    weights = bilateral_weights(
        image[rows, cols],
        image[row, col],
        (rows - row) ** 2 + (cols - col) ** 2,
        sigma_spatial,
        sigma_intensity,
    )
    cost = patch_costs(
        image,
        src_view.image.astype(np.float64),
        H,
        rows,
        cols,
        np.ones(rows.shape, dtype=bool),
        weights,
    )
    return float(cost[0])
