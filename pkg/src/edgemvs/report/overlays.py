"""RGB debug overlays for the per-stage CLI commands."""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.deform.sampling import DeformedPatch
from edgemvs.core.guidance.occlusion import OcclusionMap
from edgemvs.core.restore.refine import Provenance, RestoredDepthMap

RGB = tuple[int, int, int]

CONTINUOUS_COLOR: RGB = (0, 0, 255)
DISCONTINUOUS_COLOR: RGB = (255, 0, 0)
TRAJECTORY_COLOR: RGB = (0, 200, 0)
SAMPLE_COLOR: RGB = (255, 255, 0)
CENTER_COLOR: RGB = (255, 0, 255)

PROVENANCE_COLORS: dict[Provenance, RGB] = {
    Provenance.INVALID: (0, 0, 0),
    Provenance.TRIANGLE_INTERP: (0, 114, 178),
    Provenance.PLANE_PROJECT: (0, 158, 115),
    Provenance.GEOM_REFINED: (230, 159, 0),
    Provenance.PROPORTIONAL_MAP: (204, 121, 167),
    Provenance.PLANE_PROJECT_FALLBACK: (213, 94, 0),
}


def gray_background(image: NDArray[np.floating], dim: float = 1.0) -> NDArray[np.uint8]:
    """(H, W, 3) copy of a [0, 255] intensity raster, optionally darkened."""
    gray = np.clip(np.rint(np.asarray(image, dtype=np.float64) * dim), 0, 255).astype(np.uint8)
    return np.repeat(gray[:, :, None], 3, axis=2)


def occlusion_overlay(
    image: NDArray[np.floating], occlusion: OcclusionMap
) -> NDArray[np.uint8]:
    """Continuous boundary pixels blue, discontinuous red, over the image."""
    rgb = gray_background(image)
    rgb[occlusion.continuous] = CONTINUOUS_COLOR
    rgb[occlusion.discontinuous] = DISCONTINUOUS_COLOR
    return rgb


def provenance_overlay(restored: RestoredDepthMap) -> NDArray[np.uint8]:
    """One color per provenance tag; invalid pixels are black."""
    palette = np.zeros((max(PROVENANCE_COLORS) + 1, 3), dtype=np.uint8)
    for tag, color in PROVENANCE_COLORS.items():
        palette[tag] = color
    return palette[restored.provenance]


def patch_overlay(
    image: NDArray[np.floating], occlusion: OcclusionMap, patch: DeformedPatch
) -> NDArray[np.uint8]:
    """Edges, trajectories, samples and the center of one deformed patch."""
    rgb = occlusion_overlay(gray_background(image, dim=0.5)[:, :, 0], occlusion)
    for trajectory in patch.trajectories:
        for pixel in trajectory.pixels:
            rgb[pixel] = TRAJECTORY_COLOR
    for pixel in patch.sample_pixels:
        rgb[pixel] = SAMPLE_COLOR
    rgb[patch.center] = CENTER_COLOR
    return rgb


def describe_patch(patch: DeformedPatch) -> str:
    """Text listing of a patch's trajectories and samples."""
    lines = [f"center {patch.center[0]} {patch.center[1]}"]
    for trajectory in patch.trajectories:
        end = trajectory.endpoint
        lines.append(
            f"trajectory {trajectory.direction} length={trajectory.length} "
            f"stop={trajectory.stop} end={end[0]},{end[1]}"
        )
    for sample in patch.samples:
        lines.append(
            f"sample {sample.pixel[0]} {sample.pixel[1]} "
            f"trajectory={sample.trajectory} fragment={sample.fragment}"
        )
    return "\n".join(lines) + "\n"
