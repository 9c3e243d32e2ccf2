"""Small builders for guidance maps and views used across the unit tests."""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.guidance.boundary import BoundaryMap
from edgemvs.core.guidance.maps import GuidanceMaps
from edgemvs.core.guidance.occlusion import EdgeLabel, OcclusionMap
from edgemvs.core.guidance.policy import EdgePolicy
from edgemvs.core.model.camera import CameraModel
from edgemvs.core.model.scene import ViewBundle


def guidance_from_labels(labels: NDArray[np.integer], budget: int = 8) -> GuidanceMaps:
    """Guidance whose boundary is every pixel carrying a non-NONE edge label."""
    edge_labels = np.asarray(labels, dtype=np.uint8)
    boundary = BoundaryMap(edge_labels != EdgeLabel.NONE)
    return GuidanceMaps(boundary, OcclusionMap.from_labels(edge_labels), EdgePolicy(budget))


def open_guidance(shape: tuple[int, int], budget: int = 8) -> GuidanceMaps:
    return GuidanceMaps.unconstrained(shape, EdgePolicy(budget))


def wall_column(shape: tuple[int, int], col: int, label: EdgeLabel) -> NDArray[np.uint8]:
    """Edge labels with one full column of ``label``."""
    labels = np.zeros(shape, dtype=np.uint8)
    labels[:, col] = label
    return labels


def simple_camera(width: int = 32, height: int = 24, focal: float = 30.0) -> CameraModel:
    K = np.array([[focal, 0.0, (width - 1) / 2], [0.0, focal, (height - 1) / 2], [0.0, 0.0, 1.0]])
    return CameraModel(K=K, R=np.eye(3), T=np.zeros(3), width=width, height=height)


def flat_view(
    name: str = "view",
    camera: CameraModel | None = None,
    image: NDArray[np.floating] | None = None,
    segmentation: NDArray[np.integer] | None = None,
    mono_depth: NDArray[np.floating] | None = None,
) -> ViewBundle:
    """A view with sensible defaults for every raster it is not given."""
    camera = camera or simple_camera()
    shape = (camera.height, camera.width)
    return ViewBundle(
        name=name,
        image=np.zeros(shape) if image is None else np.asarray(image, dtype=np.float64),
        segmentation=(
            np.ones(shape, dtype=np.int32)
            if segmentation is None
            else np.asarray(segmentation, dtype=np.int32)
        ),
        mono_depth=np.ones(shape) if mono_depth is None else np.asarray(mono_depth, np.float64),
        camera=camera,
    )
