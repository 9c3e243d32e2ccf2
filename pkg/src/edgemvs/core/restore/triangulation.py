"""Segmentation-driven triangulation of sparse observations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.spatial import Delaunay, QhullError

from edgemvs.core.model.camera import FloatArray
from edgemvs.core.model.errors import ContractError
from edgemvs.core.model.scene import UNLABELED, SparsePointSet, ViewBundle

#: Label given to the single cluster built when segmentation is ignored.
ALL_PIXELS = -1
VERTEX_SNAP_PX = 1e-9
_MIN_AREA = 1e-9
_INSIDE_TOLERANCE = 1e-9


@dataclass(eq=False)
class InstanceCluster:
    """Observations of one instance and their triangulation.

    ``triangles`` indexes rows of ``pixels``/``depths``; ``delaunay`` is kept
    for point location and is None when the cluster has no triangle.
    """

    label: int
    pixels: FloatArray
    depths: FloatArray
    triangles: NDArray[np.int64] = field(default_factory=lambda: np.zeros((0, 3), np.int64))
    delaunay: Delaunay | None = None
    #: Maps Delaunay simplex index to a row of ``triangles`` (-1 = dropped sliver).
    simplex_to_triangle: NDArray[np.int64] = field(
        default_factory=lambda: np.zeros(0, np.int64)
    )

    def __len__(self) -> int:
        return len(self.depths)

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    def vertices(self, triangle: int) -> FloatArray:
        return self.pixels[self.triangles[triangle]]

    def centroids(self) -> FloatArray:
        return self.pixels[self.triangles].mean(axis=1)

    def locate(self, points: FloatArray) -> NDArray[np.int64]:
        """Triangle row containing each (u, v) point, -1 outside."""
        if self.delaunay is None or len(points) == 0:
            return np.full(len(points), -1, dtype=np.int64)
        simplex = self.delaunay.find_simplex(points, tol=_INSIDE_TOLERANCE)
        result = np.full(len(points), -1, dtype=np.int64)
        inside = simplex >= 0
        result[inside] = self.simplex_to_triangle[simplex[inside]]
        return result


def _triangulate(cluster: InstanceCluster) -> None:
    if len(cluster) < 3:
        return
    centered = cluster.pixels - cluster.pixels.mean(axis=0)
    if np.linalg.matrix_rank(centered, tol=1e-9) < 2:
        return
    try:
        delaunay = Delaunay(cluster.pixels)
    except QhullError:
        return

    corners = cluster.pixels[delaunay.simplices]
    edges_a = corners[:, 1] - corners[:, 0]
    edges_b = corners[:, 2] - corners[:, 0]
    areas = 0.5 * np.abs(edges_a[:, 0] * edges_b[:, 1] - edges_a[:, 1] * edges_b[:, 0])
    keep = areas > _MIN_AREA
    mapping = np.full(len(delaunay.simplices), -1, dtype=np.int64)
    mapping[keep] = np.arange(int(keep.sum()))

    cluster.triangles = delaunay.simplices[keep].astype(np.int64)
    cluster.delaunay = delaunay
    cluster.simplex_to_triangle = mapping


def cluster_and_triangulate(
    view: ViewBundle,
    sparse: SparsePointSet,
    view_index: int,
    use_segmentation: bool = True,
) -> list[InstanceCluster]:
    """Group this view's observations by instance label and triangulate each group.

    Groups with fewer than 3 members, or only collinear members, carry no
    triangles. Observations on UNLABELED pixels join no group, so those
    pixels stay Invalid. Without segmentation every observation joins one
    group.
    """
    observations = sparse.in_view(view_index, view.camera)
    if len(observations) == 0:
        return []

    pixels = observations.pixels
    if use_segmentation:
        rows = np.clip(np.rint(pixels[:, 1]).astype(int), 0, view.camera.height - 1)
        cols = np.clip(np.rint(pixels[:, 0]).astype(int), 0, view.camera.width - 1)
        labels = view.segmentation[rows, cols]
        keep = labels != UNLABELED
        pixels, depths, labels = pixels[keep], observations.depths[keep], labels[keep]
    else:
        depths = observations.depths
        labels = np.full(len(pixels), ALL_PIXELS)

    clusters = []
    for label in np.unique(labels).tolist():
        members = labels == label
        cluster = InstanceCluster(
            label=int(label),
            pixels=pixels[members],
            depths=depths[members],
        )
        _triangulate(cluster)
        clusters.append(cluster)
    return clusters


def barycentric(point: FloatArray, vertices: FloatArray) -> FloatArray:
    """Barycentric coordinates of (N, 2) points in one triangle, shape (N, 3)."""
    a, b, c = vertices
    v0, v1 = b - a, c - a
    denominator = v0[0] * v1[1] - v1[0] * v0[1]
    rel = np.atleast_2d(point) - a
    l1 = (rel[:, 0] * v1[1] - v1[0] * rel[:, 1]) / denominator
    l2 = (v0[0] * rel[:, 1] - rel[:, 0] * v0[1]) / denominator
    return np.column_stack([1.0 - l1 - l2, l1, l2])


def interpolate_triangle_depth(
    pixel: FloatArray | tuple[float, float], vertices: FloatArray, depths: FloatArray
) -> float:
    """Inverse-distance-weighted depth of a point inside a triangle.

    Args:
        pixel: (u, v) point, inside or on the triangle
        vertices: (3, 2) triangle corners in pixels
        depths: Depth at each corner

    Raises:
        ContractError: If the point lies outside the triangle
    """
    point = np.asarray(pixel, dtype=np.float64)
    weights = barycentric(point, vertices)[0]
    if (weights < -_INSIDE_TOLERANCE).any():
        raise ContractError(f"pixel {tuple(point)} lies outside the triangle")
    return float(idw_depth(point[None], vertices[None], depths[None])[0])


def idw_depth(points: FloatArray, vertices: FloatArray, depths: FloatArray) -> FloatArray:
    """Vectorized inverse-distance weighting for (N, 2) points.

    ``vertices`` is (N, 3, 2) and ``depths`` (N, 3); a point within
    VERTEX_SNAP_PX of a vertex takes that vertex's depth exactly.
    """
    distance = np.linalg.norm(vertices - points[:, None, :], axis=2)
    return inverse_weighted(distance, depths, VERTEX_SNAP_PX)


def inverse_weighted(distance: FloatArray, values: FloatArray, snap: float) -> FloatArray:
    """sum(v / d) / sum(1 / d) along axis 1, snapping to v where d < snap."""
    snapped = distance < snap
    any_snap = snapped.any(axis=1)
    safe = np.where(snapped, 1.0, distance)
    weights = 1.0 / safe
    result = (values * weights).sum(axis=1) / weights.sum(axis=1)
    first = snapped.argmax(axis=1)
    rows = np.arange(len(values))
    result[any_snap] = values[rows[any_snap], first[any_snap]]
    return result
