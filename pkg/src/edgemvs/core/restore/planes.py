"""RANSAC plane classification of triangles on the monocular depth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.model.camera import FloatArray
from edgemvs.core.restore.triangulation import barycentric

_BATCH = 250
_SINGULAR = 1e-12


@dataclass(frozen=True)
class PlaneFit:
    """Outcome of classifying one triangle.

    ``coefficients`` are (a, b, c) of D = a*u + b*v + c, or None when no
    plane could be fitted.
    """

    planar: bool
    inlier_ratio: float
    coefficients: tuple[float, float, float] | None = None

    def distance(self, u: FloatArray, v: FloatArray, d: FloatArray) -> FloatArray:
        """Perpendicular distance of (u, v, D) points to the fitted plane."""
        if self.coefficients is None:
            return np.full(np.shape(u), np.inf)
        a, b, c = self.coefficients
        return np.abs(a * u + b * v + c - d) / np.sqrt(a * a + b * b + 1.0)


NON_PLANAR = PlaneFit(planar=False, inlier_ratio=0.0)


def covered_pixels(
    vertices: FloatArray, shape: tuple[int, int], mask: NDArray[np.bool_] | None = None
) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    """(rows, cols) of pixel centers inside or on the triangle."""
    height, width = shape
    u0 = max(int(np.floor(vertices[:, 0].min())), 0)
    u1 = min(int(np.ceil(vertices[:, 0].max())), width - 1)
    v0 = max(int(np.floor(vertices[:, 1].min())), 0)
    v1 = min(int(np.ceil(vertices[:, 1].max())), height - 1)
    if u1 < u0 or v1 < v0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    rows, cols = np.mgrid[v0 : v1 + 1, u0 : u1 + 1]
    rows, cols = rows.ravel(), cols.ravel()
    weights = barycentric(np.column_stack([cols, rows]).astype(np.float64), vertices)
    inside = (weights >= -1e-9).all(axis=1)
    if mask is not None:
        inside &= mask[rows, cols]
    return rows[inside], cols[inside]


def classify_triangle(
    vertices: FloatArray,
    mono_normalized: NDArray[np.floating],
    ransac_threshold: float,
    planar_ratio: float,
    rng: np.random.Generator,
    iterations: int = 1000,
    mask: NDArray[np.bool_] | None = None,
) -> PlaneFit:
    """Fit D = a*u + b*v + c over the covered pixels by RANSAC.

    Args:
        vertices: (3, 2) triangle corners in pixels
        mono_normalized: Monocular depth scaled to [0, 1]
        ransac_threshold: Inlier bound on |residual|
        planar_ratio: Planar iff the inlier ratio exceeds this
        rng: Source of the minimal samples
        iterations: RANSAC hypotheses drawn
        mask: Restrict to pixels where True (the instance)

    Returns:
        PlaneFit; a triangle covering fewer than 3 pixels is non-planar with
        ratio 0.
    """
    rows, cols = covered_pixels(vertices, mono_normalized.shape, mask)
    count = len(rows)
    if count < 3:
        return NON_PLANAR
    u = cols.astype(np.float64)
    v = rows.astype(np.float64)
    d = mono_normalized[rows, cols].astype(np.float64)
    design = np.column_stack([u, v, np.ones(count)])

    best_inliers = -1
    best_mask: NDArray[np.bool_] | None = None
    for start in range(0, iterations, _BATCH):
        batch = min(_BATCH, iterations - start)
        picks = rng.integers(0, count, size=(batch, 3))
        systems = design[picks]
        solvable = np.abs(np.linalg.det(systems)) > _SINGULAR
        if not solvable.any():
            continue
        models = np.linalg.solve(systems[solvable], d[picks[solvable]][..., None])[..., 0]
        residuals = np.abs(models @ design.T - d[None, :])
        inliers = residuals <= ransac_threshold
        counts = inliers.sum(axis=1)
        winner = int(np.argmax(counts))
        if counts[winner] > best_inliers:
            best_inliers = int(counts[winner])
            best_mask = inliers[winner]

    if best_mask is None:
        return NON_PLANAR
    ratio = best_inliers / count
    coefficients, *_ = np.linalg.lstsq(design[best_mask], d[best_mask], rcond=None)
    a, b, c = (float(x) for x in coefficients)
    return PlaneFit(planar=ratio > planar_ratio, inlier_ratio=ratio, coefficients=(a, b, c))
