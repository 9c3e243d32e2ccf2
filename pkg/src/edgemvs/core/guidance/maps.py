"""Per-view guidance bundle used by deformation and the solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.guidance.boundary import BoundaryMap, extract_boundary
from edgemvs.core.guidance.occlusion import EdgeLabel, OcclusionMap, compute_occlusion_map
from edgemvs.core.guidance.policy import EdgePolicy
from edgemvs.core.model.config import AblationConfig, EngineConfig


@dataclass(frozen=True, eq=False)
class GuidanceMaps:
    boundary: BoundaryMap
    occlusion: OcclusionMap
    policy: EdgePolicy

    @property
    def shape(self) -> tuple[int, int]:
        return self.boundary.shape

    @property
    def walls(self) -> NDArray[np.bool_]:
        """Discontinuous boundary pixels."""
        return self.occlusion.discontinuous

    @property
    def continuous(self) -> NDArray[np.bool_]:
        return self.occlusion.continuous

    @classmethod
    def unconstrained(cls, shape: tuple[int, int], policy: EdgePolicy) -> GuidanceMaps:
        """No boundaries at all."""
        boundary = BoundaryMap(np.zeros(shape, dtype=bool))
        return cls(boundary, OcclusionMap.uniform(boundary, EdgeLabel.NONE), policy)


def build_guidance(
    segmentation: NDArray[np.integer],
    mono_depth: NDArray[np.floating],
    engine: EngineConfig,
    ablation: AblationConfig,
) -> GuidanceMaps:
    """Boundary and occlusion maps for one view at one resolution.

    With occlusion classification off every boundary is treated as
    discontinuous; with strict edges off every boundary is continuous.
    """
    boundary = extract_boundary(segmentation)
    policy = EdgePolicy(engine.crossing_budget)
    if not ablation.strict_edges:
        occlusion = OcclusionMap.uniform(boundary, EdgeLabel.CONTINUOUS)
    elif not ablation.occlusion:
        occlusion = OcclusionMap.uniform(boundary, EdgeLabel.DISCONTINUOUS)
    else:
        occlusion = compute_occlusion_map(
            boundary,
            mono_depth,
            engine.window_size,
            engine.gradient_threshold,
            engine.min_cluster_size,
        )
    return GuidanceMaps(boundary, occlusion, policy)
