"""Raster-wide scoring of hypotheses at one pyramid layer."""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.deform.kernels import PatchSet
from edgemvs.core.match.costs import (
    best_views,
    color_gaps,
    depth_difference_error,
    normalized_terms,
    patch_color_error,
    reprojection_error,
)
from edgemvs.core.match.photometric import (
    bilateral_weights,
    bilinear,
    plane_homographies,
    warp_points,
    weighted_ncc_cost,
)
from edgemvs.core.match.pyramid import LayerView
from edgemvs.core.model.camera import FloatArray
from edgemvs.core.model.config import WEIGHT_TERMS
from edgemvs.core.model.hypothesis import CostWeights, HypothesisMap

#: Rows of a term block: the four weighted terms, then the raw photometric cost.
PHOTOMETRIC_ROW = len(WEIGHT_TERMS)
TERM_ROWS = PHOTOMETRIC_ROW + 1
CHUNK = 4096


@dataclass(frozen=True, eq=False)
class SourceLayer:
    """A source view at the current layer and its previous-pass depth, if any."""

    view: LayerView
    depth: FloatArray | None = None


@dataclass(frozen=True)
class CostSettings:
    truncation: float
    intensity_sigma: float
    view_fraction: float
    depth_tolerance: float


@dataclass(eq=False)
class CostEvaluator:
    """Scores plane hypotheses of reference pixels against every source.

    Pixels are addressed by flat index. ``evaluate`` returns a term block of
    shape (sources, TERM_ROWS, N); ``combine`` turns blocks into the final
    aggregated cost under a set of weights.
    """

    reference: LayerView
    sources: list[SourceLayer]
    patches: PatchSet
    restored: FloatArray
    settings: CostSettings
    coarser_matching: list[FloatArray] = field(default_factory=list)

    def __post_init__(self) -> None:
        height, width = self.reference.shape
        rows, cols = np.indices((height, width))
        count = self.patches.max_samples
        self._rows = np.concatenate(
            [rows.reshape(1, -1), self.patches.sample_rows.reshape(count, -1)]
        ).astype(np.int32)
        self._cols = np.concatenate(
            [cols.reshape(1, -1), self.patches.sample_cols.reshape(count, -1)]
        ).astype(np.int32)
        center_valid = np.ones((1, height * width), dtype=bool)
        self._valid = np.concatenate(
            [center_valid, self.patches.sample_valid.reshape(count, -1)]
        )
        self._sigma_spatial = np.maximum(1.0, self.patches.mean_length.ravel() / 2.0)
        self._pixels = np.column_stack([cols.ravel(), rows.ravel()]).astype(np.float64)
        self._restored = self.restored.ravel()
        if self.coarser_matching:
            self._coarser = np.sum([c.ravel() for c in self.coarser_matching], axis=0)
        else:
            self._coarser = np.zeros(height * width)
        self.keep = max(1, math.ceil(self.settings.view_fraction * len(self.sources)))

    @property
    def pixel_count(self) -> int:
        return len(self._pixels)

    @property
    def nbytes(self) -> int:
        """Bytes held by the flattened sample tables."""
        return self._rows.nbytes + self._cols.nbytes + self._valid.nbytes

    def rays(self, index: NDArray[np.int64]) -> FloatArray:
        """Unit-z viewing rays of the given pixels."""
        return self.reference.camera.rays(self._pixels[index])

    def evaluate(
        self, index: NDArray[np.int64], depth: FloatArray, normal: FloatArray
    ) -> FloatArray:
        """Term block (sources, TERM_ROWS, N) for hypotheses at ``index``."""
        block = np.empty((len(self.sources), TERM_ROWS, len(index)))
        for start in range(0, len(index), CHUNK):
            part = slice(start, start + CHUNK)
            block[:, :, part] = self._evaluate_chunk(index[part], depth[part], normal[part])
        return block

    def _evaluate_chunk(
        self, index: NDArray[np.int64], depth: FloatArray, normal: FloatArray
    ) -> FloatArray:
        ref = self.reference
        settings = self.settings
        rows, cols, valid = self._rows[:, index], self._cols[:, index], self._valid[:, index]
        ref_values = ref.image[rows, cols]
        weights = bilateral_weights(
            ref_values,
            ref_values[0],
            ((rows - rows[0]) ** 2 + (cols - cols[0]) ** 2).astype(np.float64),
            self._sigma_spatial[index],
            settings.intensity_sigma,
        )
        pixels = self._pixels[index]
        ref_points = np.column_stack([rows.ravel(), cols.ravel()])
        supervision = depth_difference_error(
            depth, self._restored[index], settings.depth_tolerance
        )
        coarser = self._coarser[index]
        layers = 1 + len(self.coarser_matching)

        block = np.empty((len(self.sources), TERM_ROWS, len(index)))
        for s, source in enumerate(self.sources):
            camera = source.view.camera
            H = plane_homographies(ref.camera, camera, pixels, depth, normal)
            u, v, inside = warp_points(H, rows, cols, source.view.shape)
            photometric = weighted_ncc_cost(
                ref_values, bilinear(source.view.image, u, v), weights, valid & inside
            )
            gaps, usable = color_gaps(
                ref.laplacian,
                source.view.laplacian,
                ref_points,
                np.column_stack([u.ravel(), v.ravel()]),
                settings.truncation,
                in_front=inside.ravel(),
            )
            color = patch_color_error(
                gaps.reshape(rows.shape),
                weights,
                valid & usable.reshape(rows.shape),
                settings.truncation,
            )
            if source.depth is None:
                reprojection = np.zeros(len(index))
            else:
                reprojection = reprojection_error(
                    pixels, depth, ref.camera, camera, source.depth, settings.truncation
                )
            block[s, :PHOTOMETRIC_ROW] = normalized_terms(
                (photometric + coarser) / layers,
                reprojection,
                color,
                supervision,
                settings.truncation,
            )
            block[s, PHOTOMETRIC_ROW] = photometric
        return block

    def combine(
        self, block: FloatArray, weights: CostWeights
    ) -> tuple[FloatArray, NDArray[np.bool_]]:
        """Final cost (N,): mean of the ``keep`` cheapest per-source costs.

        Returns the cost and the (sources, N) mask of sources that entered it.
        """
        terms = block[:, :PHOTOMETRIC_ROW]
        per_source = np.tensordot(weights.as_array(), terms, axes=([0], [1]))
        selected = best_views(per_source, self.keep)
        cost = np.where(selected, per_source, 0.0).sum(axis=0) / self.keep
        return cost, selected

    def selected_terms(self, block: FloatArray, selected: NDArray[np.bool_]) -> FloatArray:
        """Rows of ``block`` averaged over the selected sources, (TERM_ROWS, N)."""
        return np.where(selected[:, None], block, 0.0).sum(axis=0) / self.keep

    def evaluate_map(self, hypotheses: HypothesisMap) -> FloatArray:
        """Term block for every pixel's own hypothesis."""
        index = np.arange(self.pixel_count)
        return self.evaluate(
            index, hypotheses.depth.ravel(), hypotheses.normal.reshape(-1, 3)
        )
