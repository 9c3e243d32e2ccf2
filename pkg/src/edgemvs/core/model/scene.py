"""Scene domain types: views, sparse points and the bundle handed to the engine."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.model.camera import CameraModel, FloatArray
from edgemvs.core.model.errors import SceneValidationError

#: Largest allowed distance between a stored observation and its reprojection.
OBSERVATION_TOLERANCE_PX = 0.5

LabelArray = NDArray[np.int32]

#: Segmentation label of pixels that belong to no instance.
UNLABELED = 0


@dataclass(frozen=True, eq=False)
class ViewBundle:
    """One calibrated view with its auxiliary rasters.

    Attributes:
        name: View identifier (file stem in the scene directory)
        image: Grayscale intensities in [0, 255], shape (H, W)
        segmentation: Instance labels, 0 = unlabeled, shape (H, W)
        mono_depth: Relative monocular depth, shape (H, W)
        camera: Calibration for this view
    """

    name: str
    image: FloatArray
    segmentation: LabelArray
    mono_depth: FloatArray
    camera: CameraModel

    @property
    def shape(self) -> tuple[int, int]:
        return (self.camera.height, self.camera.width)

    def validate(self) -> None:
        """Raise SceneValidationError naming this view on any broken invariant."""
        self.camera.validate(f"view '{self.name}'")
        for label, raster in (
            ("image", self.image),
            ("segmentation", self.segmentation),
            ("mono depth", self.mono_depth),
        ):
            if raster.shape != self.shape:
                raise SceneValidationError(
                    f"view '{self.name}': {label} is {raster.shape[1]}x{raster.shape[0]}, "
                    f"camera expects {self.camera.width}x{self.camera.height}"
                )
        if (self.segmentation < 0).any():
            raise SceneValidationError(f"view '{self.name}': negative segmentation label")
        if not np.isfinite(self.mono_depth).all():
            raise SceneValidationError(f"view '{self.name}': non-finite monocular depth")


@dataclass(frozen=True)
class Observation:
    view: int
    u: float
    v: float


@dataclass(frozen=True, eq=False)
class SparsePoint:
    position: FloatArray
    observations: tuple[Observation, ...]


@dataclass(frozen=True)
class ViewObservations:
    """All sparse observations falling in one view, as parallel arrays."""

    pixels: FloatArray
    depths: FloatArray
    point_ids: NDArray[np.int64]

    def __len__(self) -> int:
        return len(self.depths)


@dataclass(frozen=True, eq=False)
class SparsePointSet:
    points: tuple[SparsePoint, ...] = ()

    def __len__(self) -> int:
        return len(self.points)

    def in_view(self, view_index: int, camera: CameraModel) -> ViewObservations:
        """Observed pixels of ``view_index`` with the depth each point projects to."""
        pixels: list[tuple[float, float]] = []
        positions: list[FloatArray] = []
        ids: list[int] = []
        for point_id, point in enumerate(self.points):
            for obs in point.observations:
                if obs.view == view_index:
                    pixels.append((obs.u, obs.v))
                    positions.append(point.position)
                    ids.append(point_id)
        if not ids:
            return ViewObservations(
                pixels=np.zeros((0, 2)), depths=np.zeros(0), point_ids=np.zeros(0, np.int64)
            )
        _, depths = camera.project(np.asarray(positions))
        return ViewObservations(
            pixels=np.asarray(pixels, dtype=np.float64),
            depths=depths,
            point_ids=np.asarray(ids, dtype=np.int64),
        )


@dataclass(frozen=True, eq=False)
class SceneBundle:
    """Immutable scene shared read-only by every worker."""

    views: tuple[ViewBundle, ...]
    sparse: SparsePointSet = field(default_factory=SparsePointSet)
    depth_range: tuple[float, float] = (0.1, 100.0)

    def validate(self) -> None:
        if len(self.views) < 2:
            raise SceneValidationError(f"scene needs at least 2 views, got {len(self.views)}")
        dmin, dmax = self.depth_range
        if not 0 < dmin < dmax:
            raise SceneValidationError(f"invalid depth range ({dmin}, {dmax})")
        for view in self.views:
            view.validate()
        self._validate_observations()

    def _validate_observations(self) -> None:
        for point_id, point in enumerate(self.sparse.points):
            for obs in point.observations:
                if not 0 <= obs.view < len(self.views):
                    raise SceneValidationError(
                        f"sparse point {point_id}: unknown view index {obs.view}"
                    )
                view = self.views[obs.view]
                stored = np.array([[obs.u, obs.v]])
                if not view.camera.contains(stored)[0]:
                    raise SceneValidationError(
                        f"view '{view.name}': observation of point {point_id} "
                        f"at ({obs.u}, {obs.v}) lies outside the raster"
                    )
                pixel, depth = view.camera.project(point.position)
                if depth[0] <= 0:
                    raise SceneValidationError(
                        f"view '{view.name}': point {point_id} projects behind the camera"
                    )
                if np.linalg.norm(pixel[0] - stored[0]) > OBSERVATION_TOLERANCE_PX:
                    raise SceneValidationError(
                        f"view '{view.name}': observation of point {point_id} is more than "
                        f"{OBSERVATION_TOLERANCE_PX} px from its projection"
                    )

    def view_index(self, name: str) -> int:
        for index, view in enumerate(self.views):
            if view.name == name:
                return index
        raise KeyError(name)
