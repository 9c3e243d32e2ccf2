"""Tests for plane-induced warping and the bilateral NCC cost."""

import numpy as np
import pytest

from edgemvs.core.deform.sampling import DeformedPatch, build_patch
from edgemvs.core.match.costs import project_to_source
from edgemvs.core.match.photometric import (
    MAX_COST,
    bilateral_weights,
    photometric_cost,
    plane_homographies,
    warp_points,
    weighted_ncc_cost,
)
from edgemvs.core.model.camera import CameraModel
from edgemvs.core.model.hypothesis import Hypothesis
from edgemvs.core.model.scene import SceneBundle
from edgemvs.core.synth import GroundTruth
from tests.factories import flat_view, open_guidance, simple_camera

FACING = (0.0, 0.0, -1.0)


def _patch(center: tuple[int, int], shape: tuple[int, int]) -> DeformedPatch:
    return build_patch(center, 8, open_guidance(shape), 6, 0, np.zeros(shape), None, 5)


class TestWeightedNcc:
    """Tests for weighted_ncc_cost."""

    def test_affine_copy_costs_nothing(self) -> None:
        """Test that NCC ignores gain and offset."""
        ref = np.random.default_rng(0).uniform(0, 255, (12, 3))
        cost = weighted_ncc_cost(ref, 3.0 * ref + 5.0, np.ones_like(ref), np.ones(ref.shape, bool))
        np.testing.assert_allclose(cost, 0.0, atol=1e-12)

    def test_inverted_patch(self) -> None:
        """Test that perfect anti-correlation gives the maximum."""
        ref = np.arange(8.0)[:, None]
        cost = weighted_ncc_cost(ref, -ref, np.ones_like(ref), np.ones(ref.shape, bool))
        assert cost[0] == pytest.approx(MAX_COST)

    def test_unscorable_columns(self) -> None:
        """Test the flat and the too-few-samples cases."""
        ref = np.arange(8.0)[:, None]
        flat = weighted_ncc_cost(ref, np.ones_like(ref), np.ones_like(ref), np.ones((8, 1), bool))
        assert flat[0] == MAX_COST
        flat_ref = weighted_ncc_cost(
            np.full_like(ref, 7.0), ref, np.ones_like(ref), np.ones((8, 1), bool)
        )
        assert flat_ref[0] == MAX_COST
        sparse_mask = np.zeros((8, 1), dtype=bool)
        sparse_mask[:3] = True
        few = weighted_ncc_cost(ref, ref, np.ones_like(ref), sparse_mask)
        assert few[0] == MAX_COST

    def test_bilateral_weights(self) -> None:
        """Test that the center weighs 1 and weights fall with distance and contrast."""
        values = np.array([[10.0], [10.0], [40.0]])
        weights = bilateral_weights(
            values, values[0], np.array([[0.0], [4.0], [0.0]]), np.array([2.0]), 10.0
        )
        assert weights[0, 0] == 1.0
        assert weights[1, 0] == pytest.approx(np.exp(-0.5))
        assert weights[2, 0] == pytest.approx(np.exp(-4.5))


class TestHomographies:
    """Tests for plane-induced homographies."""

    def test_same_camera_is_identity(self) -> None:
        """Test that a view warped onto itself does not move."""
        camera = simple_camera()
        H = plane_homographies(
            camera, camera, np.array([[5.0, 7.0]]), np.array([2.0]), np.array([FACING])
        )
        np.testing.assert_allclose(H[0], np.eye(3), atol=1e-12)

    def test_matches_point_transfer(self, plane_scene: tuple[SceneBundle, GroundTruth]) -> None:
        """Test that the plane's homography moves pixels where their 3D points project."""
        scene, _ = plane_scene
        ref, src = scene.views[0].camera, scene.views[1].camera
        center = np.array([[20.0, 15.0]])
        H = plane_homographies(ref, src, center, np.array([4.0]), np.array([FACING]))
        rows = np.array([[15], [10], [30]])
        cols = np.array([[20], [5], [40]])
        u, v, _ = warp_points(H, rows, cols, (ref.height, ref.width))
        pixels = np.column_stack([cols.ravel(), rows.ravel()]).astype(np.float64)
        expected, _ = project_to_source(ref, src, pixels, np.full(3, 4.0))
        np.testing.assert_allclose(np.column_stack([u.ravel(), v.ravel()]), expected, atol=1e-9)

    def test_warp_outside(self) -> None:
        """Test the inside flag for points leaving the raster."""
        u, v, inside = warp_points(
            np.eye(3)[None], np.array([[0], [5]]), np.array([[-1], [3]]), (6, 6)
        )
        assert inside[:, 0].tolist() == [False, True]
        assert (u[1, 0], v[1, 0]) == (3.0, 5.0)


class TestPhotometricCost:
    """Tests for photometric_cost."""

    def test_view_against_itself(self) -> None:
        """Test that any hypothesis scores zero against the same view."""
        image = np.random.default_rng(4).uniform(0, 255, (24, 32))
        view = flat_view(image=image)
        cost = photometric_cost(view, view, Hypothesis(2.0, FACING), _patch((12, 16), (24, 32)))
        assert cost < 1e-6

    def test_everything_warped_out(self) -> None:
        """Test that a source seeing none of the patch gets the maximum cost."""
        image = np.random.default_rng(4).uniform(0, 255, (24, 32))
        ref = flat_view(image=image)
        far = CameraModel(simple_camera().K, np.eye(3), np.array([100.0, 0.0, 0.0]), 32, 24)
        src = flat_view(camera=far, image=image)
        cost = photometric_cost(ref, src, Hypothesis(2.0, FACING), _patch((12, 16), (24, 32)))
        assert cost == MAX_COST

    def test_true_plane_beats_wrong_depth(
        self, plane_scene: tuple[SceneBundle, GroundTruth]
    ) -> None:
        """Test on a synthetic backdrop that the true depth is the cheaper hypothesis."""
        scene, _ = plane_scene
        ref, src = scene.views[0], scene.views[1]
        patch = _patch((20, 24), ref.shape)
        true_cost = photometric_cost(ref, src, Hypothesis(4.0, FACING), patch)
        wrong_cost = photometric_cost(ref, src, Hypothesis(2.5, FACING), patch)
        assert true_cost < 0.3
        assert true_cost < wrong_cost
