"""PNG rasters through OpenCV: grayscale images, 16-bit labels, color overlays."""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np
from numpy.typing import NDArray

from edgemvs.core.model.errors import RasterFormatError, SceneLoadError

MAX_LABEL = np.iinfo(np.uint16).max


def read_gray(path: str | Path) -> NDArray[np.float64]:
    """Intensity raster in [0, 255]; color files are converted to grayscale."""
    image = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if image is None:
        raise SceneLoadError(f"cannot read image {path}")
    return image.astype(np.float64)


def read_labels(path: str | Path) -> NDArray[np.int32]:
    """Instance labels from a single-channel 8- or 16-bit PNG."""
    labels = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if labels is None:
        raise SceneLoadError(f"cannot read segmentation {path}")
    if labels.ndim != 2:
        raise RasterFormatError(f"{path}: segmentation must be single-channel")
    return labels.astype(np.int32)


def write_gray(image: NDArray[np.floating], path: str | Path) -> None:
    _imwrite(path, np.clip(np.rint(image), 0, 255).astype(np.uint8))


def write_labels(labels: NDArray[np.integer], path: str | Path) -> None:
    if labels.min(initial=0) < 0 or labels.max(initial=0) > MAX_LABEL:
        raise RasterFormatError(f"{path}: labels must fit in 16 bits")
    _imwrite(path, labels.astype(np.uint16))


def write_rgb(image: NDArray[np.uint8], path: str | Path) -> None:
    """Write an (H, W, 3) RGB overlay."""
    _imwrite(path, cv2.cvtColor(image, cv2.COLOR_RGB2BGR))


def read_rgb(path: str | Path) -> NDArray[np.uint8]:
    image = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if image is None:
        raise SceneLoadError(f"cannot read image {path}")
    return cv2.cvtColor(image, cv2.COLOR_BGR2RGB)


def _imwrite(path: str | Path, array: NDArray[np.generic]) -> None:
    if not cv2.imwrite(str(path), array):
        raise OSError(f"cannot write {path}")
