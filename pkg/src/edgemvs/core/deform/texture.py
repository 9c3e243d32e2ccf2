"""Textureness: local intensity variance."""

from __future__ import annotations

import cv2
import numpy as np
from numpy.typing import NDArray

from edgemvs.core.model.errors import ConfigurationError


def compute_textureness(image: NDArray[np.floating], window_size: int) -> NDArray[np.float64]:
    """Variance of the intensities inside each pixel's window.

    The window is clipped to the raster, so border pixels use fewer samples.
    Sums are accumulated unnormalized, which keeps integer-valued images exact
    (a constant neighborhood gives exactly 0).

    Raises:
        ConfigurationError: If window_size is even or smaller than 3
    """
    if window_size < 3 or window_size % 2 == 0:
        raise ConfigurationError(f"texture window must be odd and >= 3, got {window_size}")
    values = image.astype(np.float64)
    ksize = (window_size, window_size)

    def window_sum(raster: NDArray[np.float64]) -> NDArray[np.float64]:
        return cv2.boxFilter(
            raster, cv2.CV_64F, ksize, normalize=False, borderType=cv2.BORDER_CONSTANT
        )

    count = window_sum(np.ones_like(values))
    total = window_sum(values)
    squares = window_sum(values * values)
    variance = (count * squares - total * total) / (count * count)
    return np.maximum(variance, 0.0)
