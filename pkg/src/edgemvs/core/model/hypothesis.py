"""PatchMatch state: per-pixel plane hypotheses and the cost weights."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from edgemvs.core.model.camera import CameraModel, FloatArray
from edgemvs.core.model.config import WEIGHT_TERMS
from edgemvs.core.model.errors import ConfigurationError

INVALID_DEPTH = -1.0


@dataclass(frozen=True)
class Hypothesis:
    """A plane through a pixel: camera depth and unit normal (camera frame)."""

    depth: float
    normal: tuple[float, float, float]

    def is_valid(self, ray: FloatArray, depth_range: tuple[float, float]) -> bool:
        n = np.asarray(self.normal)
        return bool(
            depth_range[0] <= self.depth <= depth_range[1]
            and abs(np.linalg.norm(n) - 1.0) <= 1e-6
            and float(n @ ray) < 0
        )


@dataclass(eq=False)
class HypothesisMap:
    """Depth (H, W) and normal (H, W, 3) rasters of one view at one layer."""

    depth: FloatArray
    normal: FloatArray

    @property
    def shape(self) -> tuple[int, int]:
        return self.depth.shape[0], self.depth.shape[1]

    def copy(self) -> HypothesisMap:
        return HypothesisMap(depth=self.depth.copy(), normal=self.normal.copy())

    def at(self, row: int, col: int) -> Hypothesis:
        n = self.normal[row, col]
        return Hypothesis(float(self.depth[row, col]), (float(n[0]), float(n[1]), float(n[2])))

    def upsampled(self, height: int, width: int) -> HypothesisMap:
        """Nearest-neighbor upsampling; depths stay metric."""
        rows = np.minimum((np.arange(height) * self.shape[0]) // height, self.shape[0] - 1)
        cols = np.minimum((np.arange(width) * self.shape[1]) // width, self.shape[1] - 1)
        return HypothesisMap(
            depth=self.depth[np.ix_(rows, cols)].copy(),
            normal=self.normal[np.ix_(rows, cols)].copy(),
        )

    @classmethod
    def fronto_parallel(cls, depth: FloatArray, camera: CameraModel) -> HypothesisMap:
        """Normals pointing back along each pixel's viewing ray."""
        return cls(depth=depth.astype(np.float64), normal=-viewing_rays(camera))


def viewing_rays(camera: CameraModel) -> FloatArray:
    """Unit viewing rays (H, W, 3) in camera coordinates."""
    rows, cols = np.mgrid[0 : camera.height, 0 : camera.width]
    pixels = np.column_stack([cols.ravel(), rows.ravel()]).astype(np.float64)
    rays = camera.rays(pixels)
    rays /= np.linalg.norm(rays, axis=1, keepdims=True)
    return rays.reshape(camera.height, camera.width, 3)


def normals_from_angles(theta: FloatArray, phi: FloatArray) -> FloatArray:
    """(sin t cos p, sin t sin p, -cos t); theta = 0 faces the camera head-on."""
    sin_theta = np.sin(theta)
    return np.stack([sin_theta * np.cos(phi), sin_theta * np.sin(phi), -np.cos(theta)], axis=-1)


def angles_from_normals(normal: FloatArray) -> tuple[FloatArray, FloatArray]:
    theta = np.arccos(np.clip(-normal[..., 2], -1.0, 1.0))
    phi = np.arctan2(normal[..., 1], normal[..., 0])
    return theta, phi


def face_camera(normal: FloatArray, rays: FloatArray) -> FloatArray:
    """Unit normals flipped where needed so that normal . ray < 0."""
    normal = normal / np.linalg.norm(normal, axis=-1, keepdims=True)
    facing = np.sum(normal * rays, axis=-1, keepdims=True)
    return np.where(facing > 0, -normal, normal)


@dataclass(frozen=True)
class CostWeights:
    """(w_m, w_r, w_c, w_d) in WEIGHT_TERMS order."""

    matching: float
    reprojection: float
    color: float
    depth: float

    @classmethod
    def from_sequence(cls, values: list[float] | tuple[float, ...] | FloatArray) -> CostWeights:
        m, r, c, d = (float(v) for v in values)
        return cls(m, r, c, d)

    def as_array(self) -> FloatArray:
        return np.array([getattr(self, term) for term in WEIGHT_TERMS])

    def normalized(self) -> CostWeights:
        values = self.as_array()
        return CostWeights.from_sequence(values / values.sum())

    def restricted(self, active: Sequence[bool]) -> CostWeights:
        """Inactive terms forced to 0 and their mass redistributed proportionally."""
        values = np.where(np.asarray(active, dtype=bool), self.as_array(), 0.0)
        if values.sum() <= 0:
            raise ConfigurationError("at least one cost term must stay active")
        return CostWeights.from_sequence(values / values.sum())

    def without_reprojection(self) -> CostWeights:
        """w_r forced to 0 (no source depth maps yet)."""
        return self.restricted([True, False, True, True])

    def check(self, min_weight: float, active: Sequence[bool] | None = None) -> None:
        """Raise unless the weights sum to 1 and every active one is at least eta."""
        values = self.as_array()
        mask = np.ones(4, dtype=bool) if active is None else np.asarray(active, dtype=bool)
        if abs(values.sum() - 1.0) > 1e-9 or values[mask].min() < min_weight - 1e-12:
            raise ConfigurationError(f"weights {tuple(values)} violate the simplex with eta")

    def __str__(self) -> str:
        return " ".join(f"{term}={getattr(self, term):.4f}" for term in WEIGHT_TERMS)
