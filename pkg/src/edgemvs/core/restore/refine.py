"""Geometry-aware refinement of triangulated depth into a dense raster.

Routing per pixel of an instance that has triangles:

* inside a planar triangle: inverse-distance interpolation of vertex depths
* inside a non-planar triangle: weights from monocular depth differences
* outside every triangle: the nearest triangle (by centroid) decides; if it
  is planar and the pixel's monocular depth lies within the RANSAC threshold
  of its plane, the triangle's depth plane is extended to the pixel,
  otherwise depth is carried over proportionally to monocular depth

Instances without triangles but with observations take the nearest
observation's depth; instances without observations stay invalid.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import IntEnum
import logging

import numpy as np
from numpy.typing import NDArray
from scipy.spatial import cKDTree

from edgemvs.core.guidance.occlusion import normalize_depth
from edgemvs.core.model.camera import FloatArray
from edgemvs.core.model.hypothesis import INVALID_DEPTH
from edgemvs.core.model.scene import ViewBundle
from edgemvs.core.restore.planes import PlaneFit, classify_triangle
from edgemvs.core.restore.triangulation import (
    ALL_PIXELS,
    InstanceCluster,
    barycentric,
    idw_depth,
    inverse_weighted,
)

logger = logging.getLogger(__name__)

MONO_SNAP = 1e-9
_RATIO_GUARD = 1e-9


class Provenance(IntEnum):
    INVALID = 0
    TRIANGLE_INTERP = 1
    PLANE_PROJECT = 2
    GEOM_REFINED = 3
    PROPORTIONAL_MAP = 4
    PLANE_PROJECT_FALLBACK = 5


@dataclass(eq=False)
class RestoredDepthMap:
    """Dense restored depth (INVALID_DEPTH where unknown) and per-pixel provenance."""

    depth: FloatArray
    provenance: NDArray[np.uint8]

    @property
    def valid(self) -> NDArray[np.bool_]:
        return self.provenance != Provenance.INVALID

    def counts(self) -> dict[str, int]:
        tally = Counter(self.provenance.ravel().tolist())
        return {member.name.lower(): tally.get(int(member), 0) for member in Provenance}

    @classmethod
    def invalid(cls, shape: tuple[int, int]) -> RestoredDepthMap:
        return cls(
            depth=np.full(shape, INVALID_DEPTH),
            provenance=np.zeros(shape, dtype=np.uint8),
        )


def _vertex_mono(cluster: InstanceCluster, mono: FloatArray) -> FloatArray:
    height, width = mono.shape
    rows = np.clip(np.rint(cluster.pixels[:, 1]).astype(int), 0, height - 1)
    cols = np.clip(np.rint(cluster.pixels[:, 0]).astype(int), 0, width - 1)
    return mono[rows, cols]


def _extend_plane(points: FloatArray, vertices: FloatArray, depths: FloatArray) -> FloatArray:
    """Depth of a 3D plane through three vertices, at pixels outside them.

    Inverse depth is affine in pixel coordinates for a plane, so barycentric
    extrapolation of 1/d is exact.
    """
    weights = barycentric(points, vertices)
    with np.errstate(divide="ignore"):
        inverse = weights @ (1.0 / depths)
        return np.where(inverse > 0, 1.0 / np.where(inverse > 0, inverse, 1.0), -1.0)


def _fill_cluster(
    cluster: InstanceCluster,
    fits: list[PlaneFit],
    pixels: FloatArray,
    mono_norm: FloatArray,
    mono_raw: FloatArray,
    ransac_threshold: float,
) -> tuple[FloatArray, NDArray[np.uint8]]:
    depth = np.full(len(pixels), INVALID_DEPTH)
    tags = np.zeros(len(pixels), dtype=np.uint8)
    rows = pixels[:, 1].astype(int)
    cols = pixels[:, 0].astype(int)

    if cluster.triangle_count == 0:
        if len(cluster) == 0:
            return depth, tags
        _, nearest = cKDTree(cluster.pixels).query(pixels)
        return cluster.depths[nearest], np.full(
            len(pixels), Provenance.PLANE_PROJECT_FALLBACK, np.uint8
        )

    planar = np.array([fit.planar for fit in fits])
    vertex_mono = _vertex_mono(cluster, mono_norm)
    located = cluster.locate(pixels)
    inside = located >= 0

    triangles = cluster.triangles[located[inside]]
    corner_px = cluster.pixels[triangles]
    corner_depth = cluster.depths[triangles]
    is_planar = planar[located[inside]]
    inside_depth = idw_depth(pixels[inside], corner_px, corner_depth)
    tag = np.full(int(inside.sum()), Provenance.TRIANGLE_INTERP, np.uint8)
    if (~is_planar).any():
        pixel_mono = mono_norm[rows[inside], cols[inside]][~is_planar]
        mono_gap = np.abs(vertex_mono[triangles[~is_planar]] - pixel_mono[:, None])
        inside_depth[~is_planar] = inverse_weighted(
            mono_gap, corner_depth[~is_planar], MONO_SNAP
        )
        tag[~is_planar] = Provenance.GEOM_REFINED
    depth[inside], tags[inside] = inside_depth, tag

    outside = ~inside
    if outside.any():
        out_px = pixels[outside]
        _, nearest = cKDTree(cluster.centroids()).query(out_px)
        out_depth = np.empty(len(out_px))
        out_tag = np.empty(len(out_px), dtype=np.uint8)
        out_rows, out_cols = rows[outside], cols[outside]
        for triangle in np.unique(nearest).tolist():
            members = nearest == triangle
            fit = fits[triangle]
            vertices = cluster.vertices(triangle)
            vertex_depths = cluster.depths[cluster.triangles[triangle]]
            u, v = out_px[members, 0], out_px[members, 1]
            close = np.zeros(int(members.sum()), dtype=bool)
            projected = np.full(int(members.sum()), -1.0)
            if fit.planar:
                gap = fit.distance(u, v, mono_norm[out_rows[members], out_cols[members]])
                close = gap < ransac_threshold
                projected = _extend_plane(out_px[members], vertices, vertex_depths)
                close &= projected > 0
            # proportional mapping from the nearest vertex of that triangle
            vertex_dist = np.linalg.norm(vertices[None] - out_px[members, None, :], axis=2)
            anchor = cluster.triangles[triangle][vertex_dist.argmin(axis=1)]
            anchor_depth = cluster.depths[anchor]
            anchor_mono = _vertex_mono(cluster, mono_raw)[anchor]
            pixel_mono = mono_raw[out_rows[members], out_cols[members]]
            guarded = np.abs(anchor_mono) < _RATIO_GUARD
            ratio = np.where(guarded, 1.0, pixel_mono / np.where(guarded, 1.0, anchor_mono))
            proportional = anchor_depth * ratio
            proportional = np.where(proportional > 0, proportional, anchor_depth)

            out_depth[members] = np.where(close, projected, proportional)
            out_tag[members] = np.where(
                close, Provenance.PLANE_PROJECT, Provenance.PROPORTIONAL_MAP
            )
        depth[outside], tags[outside] = out_depth, out_tag
    return depth, tags


def refine_depth(
    clusters: list[InstanceCluster],
    view: ViewBundle,
    ransac_threshold: float,
    planar_ratio: float,
    rng: np.random.Generator,
    ransac_iterations: int = 1000,
) -> RestoredDepthMap:
    """Dense restored depth for ``view`` from its triangulated clusters."""
    shape = view.shape
    restored = RestoredDepthMap.invalid(shape)
    mono_raw = view.mono_depth.astype(np.float64)
    mono_norm = normalize_depth(mono_raw, high=1.0)
    rows, cols = np.indices(shape)

    for cluster in clusters:
        if cluster.label == ALL_PIXELS:
            region = np.ones(shape, dtype=bool)
        else:
            region = view.segmentation == cluster.label
        fits = [
            classify_triangle(
                cluster.vertices(t),
                mono_norm,
                ransac_threshold,
                planar_ratio,
                rng,
                ransac_iterations,
                mask=region,
            )
            for t in range(cluster.triangle_count)
        ]
        pixels = np.column_stack([cols[region], rows[region]]).astype(np.float64)
        depth, tags = _fill_cluster(
            cluster, fits, pixels, mono_norm, mono_raw, ransac_threshold
        )
        restored.depth[region] = depth
        restored.provenance[region] = tags

    logger.debug("restored view %s: %s", view.name, restored.counts())
    return restored
