"""Dual-category edge constraint.

Discontinuous boundary pixels are walls. A Continuous boundary pixel may be
crossed, after which a trajectory gets a budget of ``epsilon(n)`` further
pixels, with ``epsilon(n) = base * 2**n`` at pyramid layer n.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum

from edgemvs.core.guidance.occlusion import EdgeLabel, OcclusionMap
from edgemvs.core.model.errors import ContractError

Pixel = tuple[int, int]


class CrossingKind(StrEnum):
    BLOCKED = "blocked"
    ALLOWED = "allowed"
    WITHIN_BUDGET = "within_budget"


@dataclass(frozen=True)
class Crossing:
    kind: CrossingKind
    #: Pixels allowed past the crossing; only set for WITHIN_BUDGET.
    remaining: int | None = None


BLOCKED = Crossing(CrossingKind.BLOCKED)
ALLOWED = Crossing(CrossingKind.ALLOWED)


@dataclass(frozen=True)
class EdgePolicy:
    crossing_budget: int = 8

    def budget_at(self, layer: int) -> int:
        return self.crossing_budget * 2**layer


def crossing_allowance(
    policy: EdgePolicy, occlusion: OcclusionMap, source: Pixel, target: Pixel, layer: int
) -> Crossing:
    """Outcome of stepping from ``source`` onto ``target`` (both (row, col)).

    Raises:
        ContractError: If the pixels are not 8-adjacent or lie outside the raster
    """
    height, width = occlusion.shape
    for row, col in (source, target):
        if not (0 <= row < height and 0 <= col < width):
            raise ContractError(f"pixel ({row}, {col}) is outside the {width}x{height} raster")
    if max(abs(source[0] - target[0]), abs(source[1] - target[1])) != 1:
        raise ContractError(f"pixels {source} and {target} are not 8-adjacent")

    label = occlusion.label_at(*target)
    if label is EdgeLabel.DISCONTINUOUS:
        return BLOCKED
    if label is EdgeLabel.CONTINUOUS:
        return Crossing(CrossingKind.WITHIN_BUDGET, policy.budget_at(layer))
    return ALLOWED
