"""Boundary maps from instance segmentation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

BoolArray = NDArray[np.bool_]


@dataclass(frozen=True, eq=False)
class BoundaryMap:
    """True where a pixel has a 4-neighbor with a different label."""

    mask: BoolArray

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape[0], self.mask.shape[1]

    def __len__(self) -> int:
        return int(self.mask.sum())


def extract_boundary(segmentation: NDArray[np.integer]) -> BoundaryMap:
    """Mark both pixels of every 4-adjacent pair whose labels differ.

    The raster border is not a boundary by itself.
    """
    mask = np.zeros(segmentation.shape, dtype=bool)
    vertical = segmentation[1:, :] != segmentation[:-1, :]
    horizontal = segmentation[:, 1:] != segmentation[:, :-1]
    mask[1:, :] |= vertical
    mask[:-1, :] |= vertical
    mask[:, 1:] |= horizontal
    mask[:, :-1] |= horizontal
    return BoundaryMap(mask)
