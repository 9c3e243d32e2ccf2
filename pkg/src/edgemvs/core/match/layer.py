"""One pyramid layer of the PatchMatch solver.

A layer builds its deformed patches once from the incoming cost raster, then
runs red-black checkerboard sweeps. Within a half-sweep every pixel of one
color reads hypotheses from a frozen snapshot, tries its propagation
candidates and refines the winner; the weights are updated after each full
sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math
import time

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.deform.kernels import PatchSet, build_patch_set
from edgemvs.core.deform.texture import compute_textureness
from edgemvs.core.guidance.maps import GuidanceMaps, build_guidance
from edgemvs.core.match.em import em_update_weights, term_means
from edgemvs.core.match.evaluator import (
    PHOTOMETRIC_ROW,
    CostEvaluator,
    CostSettings,
    SourceLayer,
)
from edgemvs.core.match.pyramid import LayerView
from edgemvs.core.match.refine import perturb_hypotheses, refine_hypotheses, search_interval
from edgemvs.core.model.camera import CameraModel, FloatArray
from edgemvs.core.model.config import AblationConfig, EngineConfig
from edgemvs.core.model.hypothesis import (
    INVALID_DEPTH,
    CostWeights,
    HypothesisMap,
    face_camera,
    normals_from_angles,
    viewing_rays,
)

logger = logging.getLogger(__name__)

#: Rays used when multi-trajectory diffusion is switched off: the axis cross.
CROSS_RAYS = 4
#: Random initial normals tilt at most this far from the optical axis.
MAX_INITIAL_TILT = math.pi / 3
#: Normals derived from restored depth steeper than this fall back to fronto-parallel.
MAX_DERIVED_TILT = math.radians(80.0)
#: Relative depth and normal gap under which a candidate repeats the incumbent.
SAME_PLANE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SweepRecord:
    """Mean aggregated cost before and after one sweep under frozen weights."""

    layer: int
    sweep: int
    weights: CostWeights
    mean_before: float
    mean_after: float


@dataclass(eq=False)
class LayerState:
    """Everything one view needs at one layer.

    ``cost`` is the aggregated cost per pixel under ``weights``; ``matching``
    is the photometric cost of the final hypotheses, kept for the multi-scale
    term of finer layers.
    ``anchor`` holds the restored planes offered to every sweep as a
    candidate; depth is INVALID_DEPTH where nothing was restored.
    """

    layer: int
    reference: LayerView
    sources: list[SourceLayer]
    hypotheses: HypothesisMap
    restored: FloatArray
    guidance: GuidanceMaps
    weights: CostWeights
    active: tuple[bool, bool, bool, bool]
    depth_range: tuple[float, float]
    depth_tolerance: float
    crossing_budget: int
    coarser_matching: list[FloatArray] = field(default_factory=list)
    cost: FloatArray | None = None
    anchor: HypothesisMap | None = None
    matching: FloatArray | None = None
    sweeps: list[SweepRecord] = field(default_factory=list)
    weight_history: list[CostWeights] = field(default_factory=list)
    peak_bytes: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.reference.shape

    @classmethod
    def create(
        cls,
        layer: int,
        reference: LayerView,
        sources: list[SourceLayer],
        hypotheses: HypothesisMap,
        restored: FloatArray,
        weights: CostWeights,
        depth_range: tuple[float, float],
        engine: EngineConfig,
        ablation: AblationConfig,
        coarser_matching: list[FloatArray] | None = None,
        cost: FloatArray | None = None,
    ) -> LayerState:
        """Build the layer's guidance and derive mu(n), epsilon(n) and the active terms."""
        anchor = None
        if ablation.restoration_init and (restored > 0).any():
            anchor = restored_planes(restored, reference.camera, depth_range)
        if not ablation.restoration_supervision:
            restored = np.full(reference.shape, INVALID_DEPTH)
        guidance = build_guidance(reference.segmentation, reference.mono_depth, engine, ablation)
        active = (
            True,
            any(source.depth is not None for source in sources),
            True,
            bool((restored > 0).any()),
        )
        return cls(
            layer=layer,
            reference=reference,
            sources=sources,
            hypotheses=hypotheses,
            restored=restored,
            guidance=guidance,
            weights=weights.restricted(active),
            active=active,
            depth_range=depth_range,
            depth_tolerance=engine.depth_tolerance_at(layer),
            crossing_budget=engine.crossing_budget_at(layer),
            coarser_matching=list(coarser_matching or []),
            cost=cost,
            anchor=anchor,
        )


def derived_normals(
    depth: FloatArray, camera: CameraModel
) -> tuple[FloatArray, NDArray[np.bool_]]:
    """Normals of the local surface of a depth raster, and where they are usable.

    A normal is usable where the pixel and its 4-neighbours have positive
    depth and the surface is not steeper than MAX_DERIVED_TILT to the ray.
    """
    height, width = depth.shape
    rows, cols = np.mgrid[0:height, 0:width]
    pixels = np.column_stack([cols.ravel(), rows.ravel()]).astype(np.float64)
    points = (camera.rays(pixels) * depth.reshape(-1, 1)).reshape(height, width, 3)
    normal = -np.cross(np.gradient(points, axis=1), np.gradient(points, axis=0))
    length = np.linalg.norm(normal, axis=2)

    valid = depth > 0
    padded = np.pad(valid, 1, mode="edge")
    usable = valid & padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    usable &= length > 0
    normal = normal / np.where(length > 0, length, 1.0)[..., None]
    unit_rays = viewing_rays(camera)
    facing = -np.sum(normal * unit_rays, axis=2)
    usable &= np.abs(facing) >= math.cos(MAX_DERIVED_TILT)
    normal = np.where(usable[..., None], normal, -unit_rays)
    return face_camera(normal, unit_rays), usable


def restored_planes(
    restored: FloatArray, camera: CameraModel, depth_range: tuple[float, float]
) -> HypothesisMap:
    """Restored depth clipped to the scene range, with normals derived from it.

    Depth stays INVALID_DEPTH where nothing was restored.
    """
    valid = restored > 0
    derived, usable = derived_normals(np.where(valid, restored, INVALID_DEPTH), camera)
    logger.debug("%d/%d restored pixels with derived normals", int(usable.sum()), valid.size)
    depth = np.where(valid, np.clip(restored, *depth_range), INVALID_DEPTH)
    return HypothesisMap(depth=depth, normal=derived)


def initialize_hypotheses(
    restored: FloatArray,
    camera: CameraModel,
    depth_range: tuple[float, float],
    rng: np.random.Generator,
) -> HypothesisMap:
    """Coarsest-layer start: restored depth where valid, random elsewhere.

    Random hypotheses draw depth uniformly in the scene range and a normal
    tilted up to MAX_INITIAL_TILT from the optical axis. The random draws
    happen for every pixel so the stream does not depend on validity.
    """
    shape = restored.shape
    low, high = depth_range
    random_depth = rng.uniform(low, high, shape)
    theta = rng.uniform(0.0, MAX_INITIAL_TILT, shape)
    phi = rng.uniform(0.0, 2.0 * math.pi, shape)
    unit_rays = viewing_rays(camera)
    random_normal = face_camera(normals_from_angles(theta, phi), unit_rays)

    valid = restored > 0
    planes = restored_planes(restored, camera, depth_range)
    depth = np.where(valid, planes.depth, random_depth)
    normal = np.where(valid[..., None], planes.normal, random_normal)
    logger.debug("initialized %d/%d pixels from restored depth", int(valid.sum()), valid.size)
    return HypothesisMap(depth=depth, normal=normal)


def transfer_plane(
    depth: FloatArray,
    normal: FloatArray,
    source_rays: FloatArray,
    target_rays: FloatArray,
    depth_range: tuple[float, float],
) -> tuple[FloatArray, NDArray[np.bool_]]:
    """Depth at target pixels of the planes passing through source pixels.

    Returns the depths and whether each transferred hypothesis is valid
    (plane faces the target ray, depth inside the scene range).
    """
    facing = np.sum(normal * target_rays, axis=1)
    offset = depth * np.sum(normal * source_rays, axis=1)
    safe = np.where(facing < 0, facing, -1.0)
    transferred = offset / safe
    valid = (facing < 0) & (transferred >= depth_range[0]) & (transferred <= depth_range[1])
    return transferred, valid


def same_plane(
    depth: FloatArray, normal: FloatArray, other_depth: FloatArray, other_normal: FloatArray
) -> NDArray[np.bool_]:
    """Where two hypothesis sets agree within SAME_PLANE_TOLERANCE (relative depth)."""
    close = np.abs(depth - other_depth) <= SAME_PLANE_TOLERANCE * np.abs(other_depth)
    return close & (np.abs(normal - other_normal) <= SAME_PLANE_TOLERANCE).all(axis=1)


@dataclass(eq=False)
class _Sweeper:
    state: LayerState
    evaluator: CostEvaluator
    patches: PatchSet
    engine: EngineConfig
    ablation: AblationConfig
    rng: np.random.Generator
    depth: FloatArray
    normal: FloatArray
    block: FloatArray
    cost: FloatArray

    def __post_init__(self) -> None:
        self.rays = self.evaluator.rays(np.arange(self.evaluator.pixel_count))
        rows, cols = np.indices(self.state.shape)
        parity = ((rows + cols) % 2).ravel()
        self.colors = [np.flatnonzero(parity == color) for color in (0, 1)]
        anchor = self.state.anchor
        self.anchor_depth = None if anchor is None else anchor.depth.ravel()
        self.anchor_normal = None if anchor is None else anchor.normal.reshape(-1, 3)

    def _scores(
        self, index: NDArray[np.int64], depth: FloatArray, normal: FloatArray
    ) -> tuple[FloatArray, FloatArray]:
        block = self.evaluator.evaluate(index, depth, normal)
        cost, _ = self.evaluator.combine(block, self.state.weights)
        return cost, block

    def half_sweep(self, color: int) -> None:
        index = self.colors[color]
        width = self.state.shape[1]
        snapshot_depth = self.depth.copy()
        snapshot_normal = self.normal.copy()
        best_depth = snapshot_depth[index]
        best_normal = snapshot_normal[index]
        best_cost = self.cost[index]
        best_block = self.block[:, :, index]
        target_rays = self.rays[index]

        def offer(select: NDArray[np.int64], depth: FloatArray, normal: FloatArray) -> None:
            """Score candidates for ``index[select]`` and keep strict improvements."""
            if len(select) == 0:
                return
            cost, block = self._scores(index[select], depth, normal)
            better = cost < best_cost[select]
            chosen = select[better]
            best_depth[chosen] = depth[better]
            best_normal[chosen] = normal[better]
            best_cost[chosen] = cost[better]
            best_block[:, :, chosen] = block[:, :, better]

        candidate_rows = self.patches.candidate_rows.reshape(len(self.patches.candidate_rows), -1)
        candidate_cols = self.patches.candidate_cols.reshape(len(self.patches.candidate_cols), -1)
        for slot in range(len(candidate_rows)):
            neighbour = (
                candidate_rows[slot, index].astype(np.int64) * width
                + candidate_cols[slot, index].astype(np.int64)
            )
            depth, valid = transfer_plane(
                snapshot_depth[neighbour],
                snapshot_normal[neighbour],
                self.rays[neighbour],
                target_rays,
                self.state.depth_range,
            )
            normal = snapshot_normal[neighbour]
            valid &= neighbour != index
            valid &= ~same_plane(depth, normal, best_depth, best_normal)
            select = np.flatnonzero(valid)
            offer(select, depth[select], normal[select])

        if self.anchor_depth is not None and self.anchor_normal is not None:
            depth = self.anchor_depth[index]
            normal = self.anchor_normal[index]
            valid = (depth > 0) & ~same_plane(depth, normal, best_depth, best_normal)
            select = np.flatnonzero(valid)
            offer(select, depth[select], normal[select])

        def cost_fn(
            select: NDArray[np.int64], depth: FloatArray, normal: FloatArray
        ) -> tuple[FloatArray, FloatArray]:
            return self._scores(index[select], depth, normal)

        interval = search_interval(best_depth, self.state.depth_tolerance, self.state.depth_range)
        if self.ablation.refinement:
            refined = refine_hypotheses(
                best_depth,
                best_normal,
                best_cost,
                best_block,
                cost_fn,
                target_rays,
                interval,
                self.rng,
                rounds=self.engine.refine_rounds,
                angle_step=self.engine.refine_angle_step,
            )
        else:
            refined = perturb_hypotheses(
                best_depth,
                best_normal,
                best_cost,
                best_block,
                cost_fn,
                target_rays,
                interval,
                self.rng,
                angle_step=self.engine.refine_angle_step,
            )
        self.depth[index], self.normal[index], self.cost[index], self.block[:, :, index] = refined

    def update_weights(self) -> None:
        state = self.state
        _, selected = self.evaluator.combine(self.block, state.weights)
        averaged = self.evaluator.selected_terms(self.block, selected)
        means, has_data = term_means(averaged[:PHOTOMETRIC_ROW], state.restored.ravel() > 0)
        active = np.asarray(state.active) & has_data
        state.weights = em_update_weights(means, self.engine.min_weight, active.tolist())
        state.weights.check(self.engine.min_weight, active.tolist())
        state.weight_history.append(state.weights)
        self.cost, _ = self.evaluator.combine(self.block, state.weights)


def _layer_patches(
    state: LayerState,
    cost: FloatArray,
    engine: EngineConfig,
    ablation: AblationConfig,
    *,
    square: bool = False,
) -> PatchSet:
    height, width = state.shape
    texture = None
    if ablation.mapping and not square:
        texture = compute_textureness(state.reference.image, engine.window_size)
    return build_patch_set(
        state.guidance,
        cost,
        ray_count=engine.ray_count if ablation.trajectories else CROSS_RAYS,
        max_radius=engine.radius_at(width, height),
        layer=state.layer,
        texture=texture,
        window_size=engine.window_size,
        deformation=ablation.deformation and not square,
        propagation=ablation.propagation and not square,
    )


def run_layer(
    state: LayerState,
    iterations: int,
    engine: EngineConfig,
    ablation: AblationConfig,
    rng: np.random.Generator,
) -> LayerState:
    """Run ``iterations`` checkerboard sweeps at one layer, updating ``state`` in place.

    Without an incoming cost raster the layer first scores its hypotheses
    with the square patch to obtain one.
    """
    started = time.perf_counter()
    shape = state.shape
    settings = CostSettings(
        truncation=engine.truncation,
        intensity_sigma=engine.intensity_sigma,
        view_fraction=engine.view_fraction,
        depth_tolerance=state.depth_tolerance,
    )

    def evaluator_for(patches: PatchSet) -> CostEvaluator:
        return CostEvaluator(
            reference=state.reference,
            sources=state.sources,
            patches=patches,
            restored=state.restored,
            settings=settings,
            coarser_matching=state.coarser_matching,
        )

    if state.cost is None:
        square_patches = _layer_patches(state, np.zeros(shape), engine, ablation, square=True)
        square = evaluator_for(square_patches)
        cost, _ = square.combine(square.evaluate_map(state.hypotheses), state.weights)
        state.cost = cost.reshape(shape)

    patches = _layer_patches(state, state.cost, engine, ablation)
    evaluator = evaluator_for(patches)
    block = evaluator.evaluate_map(state.hypotheses)
    cost, _ = evaluator.combine(block, state.weights)
    sweeper = _Sweeper(
        state=state,
        evaluator=evaluator,
        patches=patches,
        engine=engine,
        ablation=ablation,
        rng=rng,
        depth=state.hypotheses.depth.ravel().copy(),
        normal=state.hypotheses.normal.reshape(-1, 3).copy(),
        block=block,
        cost=cost,
    )

    for sweep in range(iterations):
        before = float(sweeper.cost.mean())
        for color in (0, 1):
            sweeper.half_sweep(color)
        after = float(sweeper.cost.mean())
        state.sweeps.append(SweepRecord(state.layer, sweep, state.weights, before, after))
        logger.debug("layer %d sweep %d: mean cost %.5f -> %.5f", state.layer, sweep, before, after)
        sweeper.update_weights()

    height, width = shape
    state.hypotheses = HypothesisMap(
        depth=sweeper.depth.reshape(height, width),
        normal=sweeper.normal.reshape(height, width, 3),
    )
    state.cost = sweeper.cost.reshape(shape)
    _, selected = evaluator.combine(sweeper.block, state.weights)
    averaged = evaluator.selected_terms(sweeper.block, selected)
    state.matching = averaged[PHOTOMETRIC_ROW].reshape(shape)
    state.peak_bytes = patches.nbytes + sweeper.block.nbytes + evaluator.nbytes
    logger.debug(
        "layer %d (%dx%d) done in %.2fs, weights %s",
        state.layer,
        width,
        height,
        time.perf_counter() - started,
        state.weights,
    )
    return state
