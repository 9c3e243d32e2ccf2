"""Sparse-monocular restoration of one view."""

from __future__ import annotations

import numpy as np

from edgemvs.core.model.config import EngineConfig
from edgemvs.core.model.scene import SparsePointSet, ViewBundle
from edgemvs.core.restore.refine import RestoredDepthMap, refine_depth
from edgemvs.core.restore.triangulation import cluster_and_triangulate


def restoration_rng(seed: int, view_index: int) -> np.random.Generator:
    """RANSAC stream for one view, independent of worker scheduling."""
    return np.random.default_rng(np.random.SeedSequence([seed, view_index]))


def restore(
    view: ViewBundle,
    sparse: SparsePointSet,
    view_index: int,
    engine: EngineConfig,
    use_segmentation: bool = True,
) -> RestoredDepthMap:
    """Triangulate, classify and refine; deterministic for a fixed seed."""
    clusters = cluster_and_triangulate(view, sparse, view_index, use_segmentation)
    return refine_depth(
        clusters,
        view,
        engine.ransac_threshold,
        engine.planar_ratio,
        restoration_rng(engine.seed, view_index),
        engine.ransac_iterations,
    )
