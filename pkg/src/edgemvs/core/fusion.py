"""Geometric-consistency fusion of per-view depth maps into one point cloud."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
import logging

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.model.camera import CameraModel, FloatArray

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FusionView:
    """One view's finished depth (H, W), camera-frame normals (H, W, 3) and camera."""

    depth: FloatArray
    normal: FloatArray
    camera: CameraModel
    image: NDArray[np.floating] | None = None


@dataclass(frozen=True, eq=False)
class PointCloud:
    positions: FloatArray
    normals: FloatArray
    colors: NDArray[np.uint8]

    def __len__(self) -> int:
        return len(self.positions)

    @classmethod
    def empty(cls) -> PointCloud:
        return cls(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 3), dtype=np.uint8))


def _consistent_points(
    index: int,
    views: Sequence[FusionView],
    min_views: int,
    depth_agreement: float,
    reprojection_px: float,
) -> PointCloud:
    view = views[index]
    camera = view.camera
    rows, cols = np.nonzero(view.depth > 0)
    if len(rows) == 0:
        return PointCloud.empty()
    pixels = np.column_stack([cols, rows]).astype(np.float64)
    points = camera.backproject(pixels, view.depth[rows, cols])
    position_sum = points.copy()
    normal_sum = view.normal[rows, cols] @ camera.R
    agreeing = np.zeros(len(rows), dtype=np.int64)

    for other_index, other in enumerate(views):
        if other_index == index:
            continue
        projected, z = other.camera.project(points)
        u = np.rint(np.nan_to_num(projected[:, 0], nan=-1.0))
        v = np.rint(np.nan_to_num(projected[:, 1], nan=-1.0))
        inside = (z > 0) & (u >= 0) & (u < other.camera.width) & (v >= 0)
        inside &= v < other.camera.height
        r = np.where(inside, v, 0).astype(np.int64)
        c = np.where(inside, u, 0).astype(np.int64)
        other_depth = other.depth[r, c]
        usable = inside & (other_depth > 0)
        safe_depth = np.where(usable, other_depth, 1.0)
        depth_ok = np.abs(z - safe_depth) / safe_depth <= depth_agreement

        other_pixels = np.column_stack([c, r]).astype(np.float64)
        other_points = other.camera.backproject(other_pixels, safe_depth)
        back, _ = camera.project(other_points)
        gap = np.linalg.norm(np.nan_to_num(back - pixels, nan=np.inf), axis=1)
        pixel_ok = gap <= reprojection_px

        agree = usable & depth_ok & pixel_ok
        position_sum[agree] += other_points[agree]
        normal_sum[agree] += other.normal[r[agree], c[agree]] @ other.camera.R
        agreeing += agree

    keep = agreeing >= min_views
    positions = position_sum[keep] / (agreeing[keep] + 1)[:, None]
    normals = normal_sum[keep]
    length = np.linalg.norm(normals, axis=1, keepdims=True)
    normals = normals / np.where(length > 0, length, 1.0)
    if view.image is None:
        gray = np.full(int(keep.sum()), 255, dtype=np.uint8)
    else:
        gray = np.clip(np.rint(view.image[rows[keep], cols[keep]]), 0, 255).astype(np.uint8)
    return PointCloud(positions, normals, np.repeat(gray[:, None], 3, axis=1))


def export_point_cloud(
    views: Sequence[FusionView],
    min_views: int = 2,
    depth_agreement: float = 0.01,
    reprojection_px: float = 2.0,
) -> PointCloud:
    """Fuse depth maps, keeping pixels confirmed by at least ``min_views`` other views.

    A pixel's 3D point is confirmed by another view when it projects inside
    that view with relative depth disagreement at most ``depth_agreement``
    and that view's point, projected back, lands within ``reprojection_px``
    of the pixel. Confirmed points are averaged with their confirmations.
    """
    parts = [
        _consistent_points(i, views, min_views, depth_agreement, reprojection_px)
        for i in range(len(views))
    ]
    parts = [part for part in parts if len(part)]
    if not parts:
        return PointCloud.empty()
    cloud = PointCloud(
        positions=np.concatenate([p.positions for p in parts]),
        normals=np.concatenate([p.normals for p in parts]),
        colors=np.concatenate([p.colors for p in parts]),
    )
    logger.info("fused %d points from %d views", len(cloud), len(views))
    return cloud
