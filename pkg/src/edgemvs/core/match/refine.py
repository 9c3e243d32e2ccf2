"""Spherical gradient refinement of plane hypotheses.

Normals are moved in spherical coordinates (theta from the optical axis,
phi around it) by a per-pixel step that halves whenever a round brings no
improvement; depths are resampled inside the pixel's search interval.
A candidate replaces the incumbent only if it is strictly cheaper.
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.model.camera import FloatArray
from edgemvs.core.model.hypothesis import Hypothesis, angles_from_normals, normals_from_angles

#: cost_fn(select, depth, normal) scores the hypotheses of the pixels
#: ``select`` (indices into the refined batch) and returns their costs plus
#: a payload whose last axis follows ``select``.
CostFn = Callable[[NDArray[np.int64], FloatArray, FloatArray], tuple[FloatArray, FloatArray]]

DEPTH_SAMPLES = 2


class _Batch:
    """Incumbent hypotheses of the pixels being refined."""

    def __init__(
        self, depth: FloatArray, normal: FloatArray, cost: FloatArray, payload: FloatArray
    ) -> None:
        self.depth = depth.copy()
        self.normal = normal.copy()
        self.cost = cost.copy()
        self.payload = payload.copy()

    def offer(
        self,
        cost_fn: CostFn,
        depth: FloatArray,
        normal: FloatArray,
        allowed: NDArray[np.bool_],
    ) -> NDArray[np.bool_]:
        select = np.flatnonzero(allowed)
        improved = np.zeros(len(self.cost), dtype=bool)
        if len(select) == 0:
            return improved
        cost, payload = cost_fn(select, depth[select], normal[select])
        better = cost < self.cost[select]
        chosen = select[better]
        self.depth[chosen] = depth[chosen]
        self.normal[chosen] = normal[chosen]
        self.cost[chosen] = cost[better]
        self.payload[..., chosen] = payload[..., better]
        improved[chosen] = True
        return improved


def refine_hypotheses(
    depth: FloatArray,
    normal: FloatArray,
    cost: FloatArray,
    payload: FloatArray,
    cost_fn: CostFn,
    rays: FloatArray,
    interval: tuple[FloatArray, FloatArray],
    rng: np.random.Generator,
    *,
    rounds: int = 3,
    angle_step: float = 0.2,
) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
    """Refine N hypotheses; returns (depth, normal, cost, payload), never worse.

    Args:
        depth: (N,) incumbent depths
        normal: (N, 3) incumbent unit normals
        cost: (N,) incumbent costs
        payload: (..., N) data carried along with the cost
        cost_fn: Scores candidate hypotheses
        rays: (N, 3) viewing rays; candidates must face the camera
        interval: (low, high) per-pixel depth bounds
        rng: Source of the depth samples
        rounds: Descent rounds
        angle_step: Initial step in radians for theta and phi
    """
    batch = _Batch(depth, normal, cost, payload)
    low, high = interval
    step = np.full(len(depth), angle_step)

    for _ in range(rounds):
        theta, phi = angles_from_normals(batch.normal)
        improved = np.zeros(len(depth), dtype=bool)
        for d_theta, d_phi in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            candidate = normals_from_angles(theta + d_theta * step, phi + d_phi * step)
            facing = np.sum(candidate * rays, axis=1) < 0
            improved |= batch.offer(cost_fn, batch.depth, candidate, facing)
        for _ in range(DEPTH_SAMPLES):
            sampled = rng.uniform(low, high)
            improved |= batch.offer(
                cost_fn, sampled, batch.normal, np.ones(len(depth), dtype=bool)
            )
        step = np.where(improved, step, step / 2.0)
    return batch.depth, batch.normal, batch.cost, batch.payload


def perturb_hypotheses(
    depth: FloatArray,
    normal: FloatArray,
    cost: FloatArray,
    payload: FloatArray,
    cost_fn: CostFn,
    rays: FloatArray,
    interval: tuple[FloatArray, FloatArray],
    rng: np.random.Generator,
    *,
    angle_step: float = 0.2,
) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
    """One round of random perturbation, used when refinement is switched off."""
    batch = _Batch(depth, normal, cost, payload)
    low, high = interval
    theta, phi = angles_from_normals(normal)
    tilted = normals_from_angles(
        theta + rng.uniform(-angle_step, angle_step, len(depth)),
        phi + rng.uniform(-angle_step, angle_step, len(depth)),
    )
    facing = np.sum(tilted * rays, axis=1) < 0
    everywhere = np.ones(len(depth), dtype=bool)
    batch.offer(cost_fn, rng.uniform(low, high), batch.normal, everywhere)
    batch.offer(cost_fn, batch.depth, tilted, facing)
    return batch.depth, batch.normal, batch.cost, batch.payload


def search_interval(
    depth: FloatArray, tolerance: float, depth_range: tuple[float, float]
) -> tuple[FloatArray, FloatArray]:
    """[d (1 - mu), d (1 + mu)] clipped to the scene's depth range."""
    low = np.clip(depth * (1.0 - tolerance), *depth_range)
    high = np.clip(depth * (1.0 + tolerance), *depth_range)
    return low, high


def spherical_gradient_refine(
    hypothesis: Hypothesis,
    cost: Callable[[Hypothesis], float],
    interval: tuple[float, float],
    rng: np.random.Generator,
    *,
    ray: tuple[float, float, float] = (0.0, 0.0, 1.0),
    rounds: int = 3,
    angle_step: float = 0.2,
) -> Hypothesis:
    """Single-pixel refinement with a plain cost callable."""

    def batch_cost(
        select: NDArray[np.int64], depth: FloatArray, normal: FloatArray
    ) -> tuple[FloatArray, FloatArray]:
        scores = np.array(
            [
                cost(Hypothesis(float(d), (float(n[0]), float(n[1]), float(n[2]))))
                for d, n in zip(depth, normal, strict=True)
            ]
        )
        return scores, np.zeros((0, len(select)))

    depth, normal, _, _ = refine_hypotheses(
        np.array([hypothesis.depth]),
        np.array([hypothesis.normal], dtype=np.float64),
        np.array([cost(hypothesis)]),
        np.zeros((0, 1)),
        batch_cost,
        np.array([ray], dtype=np.float64),
        (np.array([interval[0]]), np.array([interval[1]])),
        rng,
        rounds=rounds,
        angle_step=angle_step,
    )
    n = normal[0]
    return Hypothesis(float(depth[0]), (float(n[0]), float(n[1]), float(n[2])))
