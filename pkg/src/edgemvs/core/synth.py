"""Synthetic piecewise-planar scenes with exact ground truth.

Surfaces are world-axis-aligned rectangles lying in planes z = const. Cameras
sit on a ring in the z = 0 plane and all look down +z with identity rotation,
so every surface is fronto-parallel in every view and its ground-truth depth
is constant. Texture is a function of the world (x, y) position on the surface
which keeps the views photo-consistent; octaves of doubling density are summed
until the finest cell is a few pixels wide. Sparse points fall at random on
textured surfaces and on the outline of flat ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum
import logging
import math
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator
from scipy import ndimage
import yaml

from edgemvs.core.model.camera import CameraModel, FloatArray
from edgemvs.core.model.errors import SynthSpecError
from edgemvs.core.model.scene import (
    Observation,
    SceneBundle,
    SparsePoint,
    SparsePointSet,
    ViewBundle,
)

logger = logging.getLogger(__name__)

_SPARSE_ATTEMPTS_PER_POINT = 200
MAX_OCTAVES = 8
#: Inset fractions of a flat surface's extent where its silhouette points sit.
_SILHOUETTE_FRACTIONS = (0.1, 0.5, 0.9)


class MonoMode(StrEnum):
    """How monocular depth distorts ground truth."""

    AFFINE = "affine"
    PER_INSTANCE = "per_instance"


class Rectangle(BaseModel):
    """A rectangle in the plane z = depth, spanning [x0, x1] x [y0, y1]."""

    x0: float
    x1: float
    y0: float
    y1: float
    depth: float = Field(gt=0)
    #: Texture cells per world unit; 0 makes the surface flat gray.
    texture_density: float = Field(default=4.0, ge=0)
    base_intensity: float = Field(default=128.0, ge=0, le=255)

    @model_validator(mode="after")
    def validate_extent(self) -> Rectangle:
        if self.x1 <= self.x0 or self.y1 <= self.y0:
            raise ValueError("rectangle needs x0 < x1 and y0 < y1")
        return self

    @property
    def textured(self) -> bool:
        return self.texture_density > 0

    def overlaps(self, other: Rectangle) -> bool:
        return (
            self.x0 < other.x1 and other.x0 < self.x1 and self.y0 < other.y1 and other.y0 < self.y1
        )


class SynthSpec(BaseModel):
    """Description of a synthetic scene (YAML-loadable)."""

    width: int = Field(default=64, ge=8)
    height: int = Field(default=48, ge=8)
    views: int = Field(default=3, ge=1)
    #: Ring radius of the camera centers, world units.
    baseline: float = Field(default=0.3, gt=0)
    #: Focal length in pixels; None = image width.
    focal: float | None = Field(default=None, gt=0)
    surfaces: list[Rectangle] = Field(
        default_factory=lambda: [
            Rectangle(x0=-10, x1=10, y0=-10, y1=10, depth=4.0, texture_density=4.0),
            Rectangle(x0=-0.5, x1=0.6, y0=-0.45, y1=0.5, depth=2.0, texture_density=6.0),
        ]
    )
    sparse_points: int = Field(default=60, ge=0)
    mono_mode: MonoMode = MonoMode.AFFINE
    mono_scale: float = Field(default=0.5, gt=0)
    mono_offset: float = 1.0
    #: (scale, offset) per surface for per-instance mode; random when omitted.
    instance_affine: list[tuple[float, float]] | None = None
    #: Finest texture cell, in pixels at the surface depth; octaves are added to reach it.
    detail_pixels: float = Field(default=3.0, gt=0)
    seed: int = Field(default=0, ge=0)

    @classmethod
    def from_yaml(cls, path: str | Path) -> SynthSpec:
        with open(path) as f:
            data = yaml.safe_load(f) or {}
        try:
            return cls(**data)
        except ValidationError as e:
            raise SynthSpecError(f"{path}: {e}") from None


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Exact per-view depth and the surface index seen at every pixel."""

    depth: tuple[FloatArray, ...]
    surface: tuple[np.ndarray, ...]


def ring_cameras(spec: SynthSpec) -> list[CameraModel]:
    focal = spec.focal or float(spec.width)
    K = np.array(
        [
            [focal, 0.0, (spec.width - 1) / 2],
            [0.0, focal, (spec.height - 1) / 2],
            [0.0, 0.0, 1.0],
        ]
    )
    cameras = []
    for i in range(spec.views):
        angle = 2 * math.pi * i / spec.views
        center = np.array([spec.baseline * math.cos(angle), spec.baseline * math.sin(angle), 0.0])
        cameras.append(
            CameraModel(K=K, R=np.eye(3), T=-center, width=spec.width, height=spec.height)
        )
    return cameras


def _check_surfaces(surfaces: list[Rectangle]) -> None:
    for i, a in enumerate(surfaces):
        for j in range(i + 1, len(surfaces)):
            b = surfaces[j]
            if a.depth == b.depth and a.overlaps(b):
                raise SynthSpecError(
                    f"surfaces {i} and {j} overlap at depth {a.depth}: front face is ambiguous"
                )


def texture_octaves(spec: SynthSpec, surface: Rectangle) -> int:
    """Octaves needed for the finest texture cell to span at most ``detail_pixels``.

    Each octave doubles the density of the one before; the count is capped
    at MAX_OCTAVES. Flat surfaces have none.
    """
    if not surface.textured:
        return 0
    focal = spec.focal or float(spec.width)
    cell = focal / (surface.depth * surface.texture_density)
    if cell <= spec.detail_pixels:
        return 1
    return min(MAX_OCTAVES, 1 + math.ceil(math.log2(cell / spec.detail_pixels)))


def _grid(surface: Rectangle, density: float, rng: np.random.Generator) -> np.ndarray:
    cols = math.ceil((surface.x1 - surface.x0) * density) + 2
    rows = math.ceil((surface.y1 - surface.y0) * density) + 2
    return rng.uniform(-1.0, 1.0, size=(rows, cols))


def _texture_grids(spec: SynthSpec, rng: np.random.Generator) -> list[list[np.ndarray]]:
    """Per surface, one random grid per octave; the base octaves are drawn first."""
    grids = [
        [_grid(surface, surface.texture_density, rng)] if surface.textured else []
        for surface in spec.surfaces
    ]
    for surface, octaves in zip(spec.surfaces, grids, strict=True):
        for octave in range(1, texture_octaves(spec, surface)):
            octaves.append(_grid(surface, surface.texture_density * 2**octave, rng))
    return grids


def _shade(
    surface: Rectangle, grids: list[np.ndarray], x: FloatArray, y: FloatArray
) -> FloatArray:
    if not grids:
        return np.full(x.shape, surface.base_intensity)
    pattern = np.zeros(x.shape)
    for octave, grid in enumerate(grids):
        density = surface.texture_density * 2**octave
        coords = np.stack([(y - surface.y0) * density, (x - surface.x0) * density])
        pattern += ndimage.map_coordinates(grid, coords, order=1, mode="nearest")
    amplitude = min(surface.base_intensity, 255 - surface.base_intensity, 100.0)
    return surface.base_intensity + amplitude * pattern / len(grids)


def render_view(
    spec: SynthSpec, camera: CameraModel, grids: list[list[np.ndarray]]
) -> tuple[FloatArray, FloatArray, np.ndarray]:
    """Image, ground-truth depth and surface index (-1 = nothing) of one view."""
    rows, cols = np.mgrid[0 : camera.height, 0 : camera.width]
    pixels = np.column_stack([cols.ravel(), rows.ravel()]).astype(np.float64)
    rays = camera.rays(pixels)
    center = camera.center

    depth = np.full(len(pixels), np.inf)
    surface_id = np.full(len(pixels), -1, dtype=np.int64)
    for index, surface in enumerate(spec.surfaces):
        z = surface.depth - center[2]
        if z <= 0:
            continue
        x = center[0] + rays[:, 0] * z
        y = center[1] + rays[:, 1] * z
        hit = (x >= surface.x0) & (x < surface.x1) & (y >= surface.y0) & (y < surface.y1)
        closer = hit & (z < depth)
        depth[closer] = z
        surface_id[closer] = index

    image = np.zeros(len(pixels))
    for index, surface in enumerate(spec.surfaces):
        mask = surface_id == index
        if mask.any():
            z = depth[mask]
            x = center[0] + rays[mask, 0] * z
            y = center[1] + rays[mask, 1] * z
            image[mask] = _shade(surface, grids[index], x, y)

    shape = (camera.height, camera.width)
    depth[surface_id < 0] = 0.0
    return (
        np.rint(np.clip(image, 0, 255)).reshape(shape),
        depth.reshape(shape),
        surface_id.reshape(shape),
    )


def _mono_depth(
    spec: SynthSpec, depth: FloatArray, surface_id: np.ndarray, affine: list[tuple[float, float]]
) -> FloatArray:
    if spec.mono_mode is MonoMode.AFFINE:
        return spec.mono_scale * depth + spec.mono_offset
    mono = np.zeros_like(depth)
    for index, (scale, offset) in enumerate(affine):
        mask = surface_id == index
        mono[mask] = scale * depth[mask] + offset
    return mono


def _observe(
    position: FloatArray,
    index: int,
    cameras: list[CameraModel],
    surface_maps: list[np.ndarray],
) -> tuple[Observation, ...]:
    """Views that see ``position`` on surface ``index`` rather than something in front."""
    observations = []
    for view, camera in enumerate(cameras):
        pixel, depth = camera.project(position)
        if depth[0] <= 0 or not camera.contains(pixel)[0]:
            continue
        col, row = (int(round(c)) for c in pixel[0])
        if surface_maps[view][row, col] != index:
            continue
        observations.append(Observation(view, float(pixel[0, 0]), float(pixel[0, 1])))
    return tuple(observations)


def _silhouette_points(
    spec: SynthSpec, cameras: list[CameraModel], surface_maps: list[np.ndarray]
) -> list[SparsePoint]:
    """Inset corners and edge midpoints of every flat surface."""
    points = []
    for index, s in enumerate(spec.surfaces):
        if s.textured:
            continue
        for fx in _SILHOUETTE_FRACTIONS:
            for fy in _SILHOUETTE_FRACTIONS:
                if fx == fy == 0.5:
                    continue
                position = np.array(
                    [s.x0 + fx * (s.x1 - s.x0), s.y0 + fy * (s.y1 - s.y0), s.depth]
                )
                observations = _observe(position, index, cameras, surface_maps)
                if len(observations) >= min(2, len(cameras)):
                    points.append(SparsePoint(position=position, observations=observations))
    return points


def _sample_sparse(
    spec: SynthSpec,
    cameras: list[CameraModel],
    surface_maps: list[np.ndarray],
    rng: np.random.Generator,
) -> SparsePointSet:
    """``sparse_points`` random points on textured surfaces plus flat-surface silhouettes."""
    if spec.sparse_points == 0:
        return SparsePointSet()
    candidates = [i for i, s in enumerate(spec.surfaces) if s.textured]
    points: list[SparsePoint] = []
    for _ in range(spec.sparse_points * _SPARSE_ATTEMPTS_PER_POINT):
        if not candidates or len(points) == spec.sparse_points:
            break
        index = candidates[rng.integers(len(candidates))]
        s = spec.surfaces[index]
        position = np.array([rng.uniform(s.x0, s.x1), rng.uniform(s.y0, s.y1), s.depth])
        observations = _observe(position, index, cameras, surface_maps)
        if len(observations) >= min(2, len(cameras)):
            points.append(SparsePoint(position=position, observations=observations))

    if candidates and len(points) < spec.sparse_points:
        logger.warning("placed %d of %d sparse points", len(points), spec.sparse_points)
    points.extend(_silhouette_points(spec, cameras, surface_maps))
    return SparsePointSet(tuple(points))


def generate_synthetic_scene(spec: SynthSpec) -> tuple[SceneBundle, GroundTruth]:
    """Render the scene, its auxiliary rasters, sparse points and ground truth.

    Raises:
        SynthSpecError: If two surfaces overlap at the same depth, or a view
            sees no surface at some pixel.
    """
    _check_surfaces(spec.surfaces)
    rng = np.random.default_rng(spec.seed)
    grids = _texture_grids(spec, rng)
    if spec.instance_affine is not None:
        if len(spec.instance_affine) != len(spec.surfaces):
            raise SynthSpecError("instance_affine needs one (scale, offset) pair per surface")
        affine = list(spec.instance_affine)
    else:
        affine = [
            (float(rng.uniform(0.3, 2.0)), float(rng.uniform(0.0, 2.0))) for _ in spec.surfaces
        ]

    cameras = ring_cameras(spec)
    views: list[ViewBundle] = []
    depths: list[FloatArray] = []
    surface_maps: list[np.ndarray] = []
    for index, camera in enumerate(cameras):
        image, depth, surface_id = render_view(spec, camera, grids)
        if (surface_id < 0).any():
            raise SynthSpecError(f"view {index} sees background with no surface; add a backdrop")
        views.append(
            ViewBundle(
                name=f"view{index:03d}",
                image=image,
                segmentation=(surface_id + 1).astype(np.int32),
                mono_depth=_mono_depth(spec, depth, surface_id, affine),
                camera=camera,
            )
        )
        depths.append(depth)
        surface_maps.append(surface_id)

    sparse = _sample_sparse(spec, cameras, surface_maps, rng)
    all_depths = np.concatenate([d.ravel() for d in depths])
    depth_range = (float(all_depths.min()) * 0.5, float(all_depths.max()) * 1.5)
    scene = SceneBundle(views=tuple(views), sparse=sparse, depth_range=depth_range)
    return scene, GroundTruth(depth=tuple(depths), surface=tuple(surface_maps))
