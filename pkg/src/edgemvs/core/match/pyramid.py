"""Image pyramid used by the coarse-to-fine solver."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TypeVar

import cv2
import numpy as np
from numpy.typing import NDArray

from edgemvs.core.match.costs import instance_laplacian
from edgemvs.core.model.camera import CameraModel, FloatArray
from edgemvs.core.model.scene import ViewBundle

MIN_SIDE = 2

ScalarT = TypeVar("ScalarT", bound=np.generic)


@dataclass(frozen=True, eq=False)
class LayerView:
    """One view resampled to a pyramid layer, camera adjusted to match."""

    name: str
    image: FloatArray
    laplacian: FloatArray
    segmentation: NDArray[np.int32]
    mono_depth: FloatArray
    camera: CameraModel

    @property
    def shape(self) -> tuple[int, int]:
        return self.image.shape[0], self.image.shape[1]


def layer_size(width: int, height: int, layer: int) -> tuple[int, int]:
    """(width, height) of layer ``layer``: ceil(side / 2**layer), at least 2."""
    scale = 2**layer
    return max(MIN_SIDE, -(-width // scale)), max(MIN_SIDE, -(-height // scale))


def resample_nearest(raster: NDArray[ScalarT], height: int, width: int) -> NDArray[ScalarT]:
    """Nearest-neighbour resampling; invalid markers and labels never blend."""
    rows = np.minimum((np.arange(height) * raster.shape[0]) // height, raster.shape[0] - 1)
    cols = np.minimum((np.arange(width) * raster.shape[1]) // width, raster.shape[1] - 1)
    return raster[np.ix_(rows, cols)].copy()


def _resize(raster: FloatArray, width: int, height: int, interpolation: int) -> FloatArray:
    if raster.shape[:2] == (height, width):
        return raster.copy()
    return cv2.resize(raster, (width, height), interpolation=interpolation)


def layer_view(view: ViewBundle, width: int, height: int, base: int) -> LayerView:
    """Resample a full-resolution view to ``width`` x ``height``.

    ``base`` is INTER_LINEAR for the input downsample step and INTER_AREA
    for pyramid layers; labels always use nearest-neighbour.
    """
    image = _resize(view.image.astype(np.float64), width, height, base)
    labels = resample_nearest(view.segmentation.astype(np.int32), height, width)
    mono = _resize(view.mono_depth.astype(np.float64), width, height, base)
    return LayerView(
        name=view.name,
        image=image,
        laplacian=instance_laplacian(image, labels),
        segmentation=labels,
        mono_depth=mono,
        camera=view.camera.scaled(width, height),
    )


def downsample_view(view: ViewBundle, factor: int) -> ViewBundle:
    """The view at 1/factor resolution (the ``downsample`` option)."""
    if factor == 1:
        return view
    width = max(MIN_SIDE, -(-view.camera.width // factor))
    height = max(MIN_SIDE, -(-view.camera.height // factor))
    layered = layer_view(view, width, height, cv2.INTER_LINEAR)
    return ViewBundle(
        name=view.name,
        image=layered.image,
        segmentation=layered.segmentation,
        mono_depth=layered.mono_depth,
        camera=layered.camera,
    )


def build_pyramid(view: ViewBundle, layers: int) -> list[LayerView]:
    """Layers 0 (finest) to ``layers - 1`` of one view."""
    width, height = view.camera.width, view.camera.height
    return [
        layer_view(view, *layer_size(width, height, layer), cv2.INTER_AREA)
        for layer in range(layers)
    ]
