"""Pinhole camera model.

World-to-camera convention: X_cam = R @ X_world + T; depth is the camera-space
z coordinate; pixel (u, v) has u along columns and v along rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.model.errors import SceneValidationError

FloatArray = NDArray[np.float64]

ORTHONORMAL_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Intrinsics K, rotation R, translation T and raster size of one view."""

    K: FloatArray
    R: FloatArray
    T: FloatArray
    width: int
    height: int

    def validate(self, name: str = "camera") -> None:
        """Raise SceneValidationError unless every camera invariant holds."""
        if self.K.shape != (3, 3) or self.R.shape != (3, 3) or self.T.shape != (3,):
            raise SceneValidationError(f"{name}: K and R must be 3x3 and T a 3-vector")
        if self.width < 2 or self.height < 2:
            raise SceneValidationError(
                f"{name}: raster must be at least 2x2, got {self.width}x{self.height}"
            )
        if not np.allclose(self.R.T @ self.R, np.eye(3), atol=ORTHONORMAL_TOLERANCE):
            raise SceneValidationError(f"{name}: rotation R is not orthonormal")
        if not np.allclose(np.tril(self.K, -1), 0.0):
            raise SceneValidationError(f"{name}: K must be upper-triangular")
        if self.K[0, 0] <= 0 or self.K[1, 1] <= 0:
            raise SceneValidationError(f"{name}: K focal entries must be positive")

    @property
    def K_inv(self) -> FloatArray:
        return np.linalg.inv(self.K)

    @property
    def center(self) -> FloatArray:
        """Camera center in world coordinates."""
        return -self.R.T @ self.T

    def to_camera(self, points: FloatArray) -> FloatArray:
        """World points (N, 3) to camera coordinates (N, 3)."""
        return points @ self.R.T + self.T

    def project(self, points: FloatArray) -> tuple[FloatArray, FloatArray]:
        """Project world points (N, 3) to pixels (N, 2) and depths (N,)."""
        cam = self.to_camera(np.atleast_2d(points))
        depth = cam[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            pix = (cam @ self.K.T)[:, :2] / depth[:, None]
        return pix, depth

    def rays(self, pixels: FloatArray) -> FloatArray:
        """Camera-space rays with unit z for pixels (N, 2)."""
        homogeneous = np.column_stack([pixels, np.ones(len(pixels))])
        return homogeneous @ self.K_inv.T

    def backproject(self, pixels: FloatArray, depth: FloatArray) -> FloatArray:
        """World points for pixels (N, 2) at camera depths (N,)."""
        cam = self.rays(pixels) * np.asarray(depth, dtype=np.float64)[:, None]
        return (cam - self.T) @ self.R

    def contains(self, pixels: FloatArray) -> NDArray[np.bool_]:
        """Whether pixel coordinates fall inside the raster (pixel centers at integers)."""
        u, v = pixels[:, 0], pixels[:, 1]
        return (u > -0.5) & (u < self.width - 0.5) & (v > -0.5) & (v < self.height - 0.5)

    def scaled(self, width: int, height: int) -> CameraModel:
        """The same camera observing a resampled raster of the given size."""
        sx, sy = width / self.width, height / self.height
        K = self.K.copy()
        K[0, 0] *= sx
        K[0, 1] *= sx
        K[1, 1] *= sy
        K[0, 2] = (K[0, 2] + 0.5) * sx - 0.5
        K[1, 2] = (K[1, 2] + 0.5) * sy - 0.5
        return CameraModel(K=K, R=self.R, T=self.T, width=width, height=height)

    def relative_to(self, other: CameraModel) -> tuple[FloatArray, FloatArray]:
        """(R_rel, t_rel) mapping this camera's coordinates into ``other``'s."""
        R_rel = other.R @ self.R.T
        t_rel = other.T - R_rel @ self.T
        return R_rel, t_rel
