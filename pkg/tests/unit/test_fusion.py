"""Tests for depth-map fusion."""

import numpy as np
import pytest

from edgemvs.core.fusion import FusionView, export_point_cloud
from edgemvs.core.model.scene import SceneBundle
from edgemvs.core.synth import GroundTruth


def _views(
    scene: SceneBundle, depths: list[np.ndarray] | tuple[np.ndarray, ...]
) -> list[FusionView]:
    views = []
    for view, depth in zip(scene.views, depths, strict=True):
        normal = np.zeros((*depth.shape, 3))
        normal[..., 2] = -1.0
        views.append(FusionView(depth, normal, view.camera, view.image))
    return views


class TestExportPointCloud:
    """Tests for export_point_cloud."""

    def test_true_depth_fuses_on_the_plane(
        self, plane_scene: tuple[SceneBundle, GroundTruth]
    ) -> None:
        """Test that consistent maps give points on the plane with its normal."""
        scene, truth = plane_scene
        cloud = export_point_cloud(_views(scene, truth.depth))
        assert len(cloud) > 0
        np.testing.assert_allclose(cloud.positions[:, 2], 4.0, atol=1e-9)
        np.testing.assert_allclose(cloud.normals, [[0.0, 0.0, -1.0]] * len(cloud), atol=1e-12)
        assert (cloud.colors[:, 0] == cloud.colors[:, 2]).all()

    def test_disagreeing_view_is_not_confirmed(
        self, plane_scene: tuple[SceneBundle, GroundTruth]
    ) -> None:
        """Test that a view off by 10% breaks confirmation by two views."""
        scene, truth = plane_scene
        depths = [truth.depth[0] * 1.1, truth.depth[1], truth.depth[2]]
        assert len(export_point_cloud(_views(scene, depths), min_views=2)) == 0
        assert len(export_point_cloud(_views(scene, depths), min_views=1)) > 0

    def test_invalid_depth_is_skipped(self, plane_scene: tuple[SceneBundle, GroundTruth]) -> None:
        """Test that maps without valid depth give an empty cloud."""
        scene, truth = plane_scene
        empty = [np.full_like(depth, -1.0) for depth in truth.depth]
        cloud = export_point_cloud(_views(scene, empty))
        assert len(cloud) == 0
        assert cloud.positions.shape == (0, 3)

    @pytest.mark.parametrize("min_views", [1, 2])
    def test_more_confirmations_fewer_points(
        self, tiny_scene: tuple[SceneBundle, GroundTruth], min_views: int
    ) -> None:
        """Test that a stricter confirmation count never adds points."""
        scene, truth = tiny_scene
        loose = export_point_cloud(_views(scene, truth.depth), min_views=min_views)
        strict = export_point_cloud(_views(scene, truth.depth), min_views=min_views + 1)
        assert len(strict) <= len(loose)
