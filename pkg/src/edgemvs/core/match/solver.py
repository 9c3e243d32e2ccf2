"""Coarse-to-fine solve of one reference view."""

from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np

from edgemvs.core.match.evaluator import SourceLayer
from edgemvs.core.match.layer import LayerState, SweepRecord, initialize_hypotheses, run_layer
from edgemvs.core.match.pyramid import LayerView, resample_nearest
from edgemvs.core.model.camera import FloatArray
from edgemvs.core.model.config import AblationConfig, EngineConfig
from edgemvs.core.model.hypothesis import (
    INVALID_DEPTH,
    CostWeights,
    HypothesisMap,
    face_camera,
    viewing_rays,
)

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ViewSolution:
    """Finest-layer result of one view for one pass."""

    depth: FloatArray
    normal: FloatArray
    cost: FloatArray
    weights: CostWeights
    sweeps: list[SweepRecord] = field(default_factory=list)
    weight_history: list[CostWeights] = field(default_factory=list)
    peak_bytes: int = 0


def initial_weights(engine: EngineConfig, with_reprojection: bool) -> CostWeights:
    """Normalized starting weights; w_r is 0 until source depth maps exist."""
    weights = CostWeights.from_sequence(engine.initial_weights).normalized()
    return weights if with_reprojection else weights.without_reprojection()


def solve_view(
    pyramids: list[list[LayerView]],
    view_index: int,
    restored: FloatArray | None,
    depth_range: tuple[float, float],
    engine: EngineConfig,
    ablation: AblationConfig,
    rng: np.random.Generator,
    prior_depths: list[FloatArray | None] | None = None,
) -> ViewSolution:
    """Run every layer from coarsest to finest for ``view_index``.

    Args:
        pyramids: Per view, layers 0..L-1 from ``build_pyramid``
        view_index: Reference view
        restored: Restored depth at layer-0 resolution, or None
        depth_range: Scene depth bounds
        engine: Numeric parameters
        ablation: Stage toggles
        rng: This view's stream for the pass
        prior_depths: Previous-pass depth per view (feeds reprojection)
    """
    layer_count = len(pyramids[view_index])
    with_reprojection = prior_depths is not None and any(
        depth is not None for i, depth in enumerate(prior_depths) if i != view_index
    )
    weights = initial_weights(engine, with_reprojection)
    hypotheses: HypothesisMap | None = None
    cost: FloatArray | None = None
    coarser: list[FloatArray] = []
    sweeps: list[SweepRecord] = []
    history: list[CostWeights] = []
    peak = 0

    for layer in reversed(range(layer_count)):
        reference = pyramids[view_index][layer]
        height, width = reference.shape
        if restored is None:
            restored_layer = np.full((height, width), INVALID_DEPTH)
        else:
            restored_layer = resample_nearest(restored, height, width)

        sources = []
        for index, pyramid in enumerate(pyramids):
            if index == view_index:
                continue
            prior = None if prior_depths is None else prior_depths[index]
            view = pyramid[layer]
            sources.append(
                SourceLayer(
                    view=view,
                    depth=None if prior is None else resample_nearest(prior, *view.shape),
                )
            )

        if hypotheses is None:
            seed_depth = restored_layer
            if not ablation.restoration_init:
                seed_depth = np.full_like(restored_layer, INVALID_DEPTH)
            hypotheses = initialize_hypotheses(seed_depth, reference.camera, depth_range, rng)
        else:
            upsampled = hypotheses.upsampled(height, width)
            hypotheses = HypothesisMap(
                depth=upsampled.depth,
                normal=face_camera(upsampled.normal, viewing_rays(reference.camera)),
            )
            assert cost is not None
            cost = resample_nearest(cost, height, width)

        state = LayerState.create(
            layer=layer,
            reference=reference,
            sources=sources,
            hypotheses=hypotheses,
            restored=restored_layer,
            weights=weights,
            depth_range=depth_range,
            engine=engine,
            ablation=ablation,
            coarser_matching=[resample_nearest(m, height, width) for m in coarser],
            cost=cost,
        )
        run_layer(state, engine.sweeps, engine, ablation, rng)

        assert state.matching is not None
        coarser.append(state.matching)
        hypotheses, cost, weights = state.hypotheses, state.cost, state.weights
        sweeps.extend(state.sweeps)
        history.extend(state.weight_history)
        peak = max(peak, state.peak_bytes)

    assert hypotheses is not None and cost is not None
    logger.info(
        "view %s solved: mean cost %.4f, weights %s",
        pyramids[view_index][0].name,
        float(cost.mean()),
        weights,
    )
    return ViewSolution(
        depth=hypotheses.depth,
        normal=hypotheses.normal,
        cost=cost,
        weights=weights,
        sweeps=sweeps,
        weight_history=history,
        peak_bytes=peak,
    )

