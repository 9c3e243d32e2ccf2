"""Occlusion maps: continuity labels for boundary pixels.

Each boundary pixel looks at the largest Sobel gradient magnitude of the
min-max normalized monocular depth inside its window; below the gradient
threshold the edge is depth-continuous, otherwise discontinuous. Small
8-connected clusters of one label are then reassigned to the other label.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import cv2
import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from edgemvs.core.guidance.boundary import BoundaryMap
from edgemvs.core.model.errors import ConfigurationError

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


class EdgeLabel(IntEnum):
    """Per-pixel label stored in :attr:`OcclusionMap.labels`."""

    NONE = 0
    CONTINUOUS = 1
    DISCONTINUOUS = 2

    @property
    def opposite(self) -> EdgeLabel:
        if self is EdgeLabel.CONTINUOUS:
            return EdgeLabel.DISCONTINUOUS
        if self is EdgeLabel.DISCONTINUOUS:
            return EdgeLabel.CONTINUOUS
        return self


@dataclass(frozen=True, eq=False)
class OcclusionMap:
    """Continuity label and cluster id per boundary pixel.

    ``labels`` holds EdgeLabel values (NONE off the boundary); ``clusters``
    holds the id of the pixel's 8-connected same-label cluster, -1 off the
    boundary.
    """

    labels: NDArray[np.uint8]
    clusters: NDArray[np.int32]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape[0], self.labels.shape[1]

    @property
    def discontinuous(self) -> NDArray[np.bool_]:
        return self.labels == EdgeLabel.DISCONTINUOUS

    @property
    def continuous(self) -> NDArray[np.bool_]:
        return self.labels == EdgeLabel.CONTINUOUS

    def label_at(self, row: int, col: int) -> EdgeLabel:
        return EdgeLabel(int(self.labels[row, col]))

    @classmethod
    def from_labels(cls, labels: NDArray[np.uint8]) -> OcclusionMap:
        return cls(labels=labels.astype(np.uint8), clusters=label_clusters(labels))

    @classmethod
    def uniform(cls, boundary: BoundaryMap, label: EdgeLabel) -> OcclusionMap:
        """Every boundary pixel carries the same label."""
        labels = np.where(boundary.mask, np.uint8(label), np.uint8(EdgeLabel.NONE))
        return cls.from_labels(labels)


def normalize_depth(mono_depth: NDArray[np.floating], high: float = 255.0) -> NDArray[np.float64]:
    """Min-max normalize to [0, high]; a constant raster maps to zeros."""
    depth = mono_depth.astype(np.float64)
    low_value, high_value = float(depth.min()), float(depth.max())
    if high_value - low_value <= 0:
        return np.zeros_like(depth)
    return (depth - low_value) / (high_value - low_value) * high


def gradient_magnitude(mono_depth: NDArray[np.floating]) -> NDArray[np.float64]:
    """3x3 Sobel magnitude of the [0, 255]-normalized monocular depth."""
    normalized = normalize_depth(mono_depth)
    gx = cv2.Sobel(normalized, cv2.CV_64F, 1, 0, ksize=3, borderType=cv2.BORDER_REPLICATE)
    gy = cv2.Sobel(normalized, cv2.CV_64F, 0, 1, ksize=3, borderType=cv2.BORDER_REPLICATE)
    return np.hypot(gx, gy)


def label_clusters(labels: NDArray[np.uint8]) -> NDArray[np.int32]:
    """Ids of 8-connected same-label clusters; -1 off the boundary."""
    clusters = np.full(labels.shape, -1, dtype=np.int32)
    next_id = 0
    for label in (EdgeLabel.CONTINUOUS, EdgeLabel.DISCONTINUOUS):
        components, count = ndimage.label(labels == label, structure=_EIGHT_CONNECTED)
        mask = components > 0
        clusters[mask] = components[mask] - 1 + next_id
        next_id += count
    return clusters


def compute_occlusion_map(
    boundary: BoundaryMap,
    mono_depth: NDArray[np.floating],
    window_size: int,
    gradient_threshold: float,
    min_cluster_size: int,
) -> OcclusionMap:
    """Classify boundary pixels as depth-continuous or discontinuous.

    Args:
        boundary: Boundary pixels of the view
        mono_depth: Monocular depth raster, any scale
        window_size: Odd window width for the gradient maximum
        gradient_threshold: Continuous iff the window maximum is below this
        min_cluster_size: Clusters with fewer pixels are reassigned

    Raises:
        ConfigurationError: If window_size is even or smaller than 3
    """
    if window_size < 3 or window_size % 2 == 0:
        raise ConfigurationError(f"occlusion window must be odd and >= 3, got {window_size}")

    g_max = ndimage.maximum_filter(
        gradient_magnitude(mono_depth), size=window_size, mode="nearest"
    )
    labels = np.full(boundary.shape, EdgeLabel.NONE, dtype=np.uint8)
    labels[boundary.mask & (g_max < gradient_threshold)] = EdgeLabel.CONTINUOUS
    labels[boundary.mask & (g_max >= gradient_threshold)] = EdgeLabel.DISCONTINUOUS

    return OcclusionMap.from_labels(reassign_small_clusters(labels, min_cluster_size))


def reassign_small_clusters(labels: NDArray[np.uint8], min_cluster_size: int) -> NDArray[np.uint8]:
    """Flip clusters smaller than ``min_cluster_size`` to the opposite label.

    Clusters are visited once, largest first (ties by first pixel in scan
    order). A small cluster flips only when the cluster it would merge into
    reaches ``min_cluster_size``; otherwise flipping would just leave another
    undersized cluster and it is kept.
    """
    clusters = label_clusters(labels)
    count = int(clusters.max()) + 1
    if count == 0:
        return labels.copy()

    flat = clusters.ravel()
    member = flat >= 0
    sizes = np.bincount(flat[member], minlength=count)
    first_pixel = np.full(count, flat.size)
    np.minimum.at(first_pixel, flat[member], np.flatnonzero(member))
    cluster_label = np.zeros(count, dtype=np.uint8)
    cluster_label[flat[member]] = labels.ravel()[member]

    forest = _ClusterForest(sizes, cluster_label, _cluster_adjacency(clusters, count))
    order = sorted(range(count), key=lambda c: (-sizes[c], first_pixel[c]))
    for cluster in order:
        forest.maybe_flip(cluster, min_cluster_size)

    final = np.array([forest.label_of(c) for c in range(count)], dtype=np.uint8)
    result = labels.copy()
    result.ravel()[member] = final[flat[member]]
    return result


def _cluster_adjacency(clusters: NDArray[np.int32], count: int) -> list[set[int]]:
    """Pairs of distinct clusters touching under 8-connectivity."""
    adjacency: list[set[int]] = [set() for _ in range(count)]
    height, width = clusters.shape
    for dr, dc in ((0, 1), (1, 0), (1, 1), (1, -1)):
        a = clusters[max(0, -dr) : height - max(0, dr), max(0, -dc) : width - max(0, dc)]
        b = clusters[max(0, dr) : height + min(0, dr), max(0, dc) : width + min(0, dc)]
        touching = (a >= 0) & (b >= 0) & (a != b)
        for x, y in zip(a[touching].tolist(), b[touching].tolist(), strict=True):
            adjacency[x].add(y)
            adjacency[y].add(x)
    return adjacency


class _ClusterForest:
    """Union-find over initial clusters tracking merged size and label."""

    def __init__(
        self, sizes: NDArray[np.int64], labels: NDArray[np.uint8], adjacency: list[set[int]]
    ) -> None:
        self.parent = list(range(len(sizes)))
        self.size = [int(s) for s in sizes]
        self.label = [EdgeLabel(int(v)) for v in labels]
        self.adjacent = [set(a) for a in adjacency]

    def find(self, node: int) -> int:
        while self.parent[node] != node:
            self.parent[node] = self.parent[self.parent[node]]
            node = self.parent[node]
        return node

    def label_of(self, node: int) -> EdgeLabel:
        return self.label[self.find(node)]

    def _union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.adjacent[ra] |= self.adjacent[rb]
        return ra

    def maybe_flip(self, cluster: int, min_size: int) -> None:
        root = self.find(cluster)
        if self.size[root] >= min_size:
            return
        target = self.label[root].opposite
        neighbors = {self.find(n) for n in self.adjacent[root]} - {root}
        joining = [n for n in neighbors if self.label[n] is target]
        merged = self.size[root] + sum(self.size[n] for n in joining)
        if merged < min_size:
            return
        self.label[root] = target
        for neighbor in joining:
            root = self._union(root, neighbor)
        self.label[root] = target
