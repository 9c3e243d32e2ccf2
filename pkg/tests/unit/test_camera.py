"""Tests for the pinhole camera model and the hypothesis types."""

import math

import numpy as np
import pytest

from edgemvs.core.model.camera import CameraModel
from edgemvs.core.model.errors import ConfigurationError, SceneValidationError
from edgemvs.core.model.hypothesis import (
    CostWeights,
    Hypothesis,
    HypothesisMap,
    angles_from_normals,
    face_camera,
    normals_from_angles,
    viewing_rays,
)
from tests.factories import simple_camera


def _rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _posed(angle: float, T: np.ndarray) -> CameraModel:
    return CameraModel(simple_camera().K, _rotation_z(angle), T, 32, 24)


class TestCameraModel:
    """Tests for CameraModel."""

    def test_backproject_then_project(self) -> None:
        """Test that a pixel lifted to a depth projects back onto itself."""
        camera = _posed(0.3, np.array([0.1, -0.2, 0.5]))
        pixels = np.array([[0.0, 0.0], [10.5, 7.25], [31.0, 23.0]])
        depth = np.array([1.0, 2.5, 7.0])
        points = camera.backproject(pixels, depth)
        projected, z = camera.project(points)
        np.testing.assert_allclose(projected, pixels, atol=1e-9)
        np.testing.assert_allclose(z, depth, atol=1e-12)

    def test_center(self) -> None:
        """Test that the camera center maps to the camera origin."""
        camera = _posed(1.1, np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(camera.to_camera(camera.center[None])[0], 0.0, atol=1e-12)

    def test_contains_uses_pixel_centers(self) -> None:
        """Test raster bounds: pixel centers sit on integers."""
        camera = simple_camera(width=4, height=3)
        pixels = np.array([[-0.49, 0.0], [-0.5, 0.0], [3.49, 2.49], [3.5, 1.0]])
        assert camera.contains(pixels).tolist() == [True, False, True, False]

    def test_scaled_keeps_projection_consistent(self) -> None:
        """Test that halving the raster halves pixel extents around the centers."""
        camera = simple_camera(width=32, height=24)
        half = camera.scaled(16, 12)
        point = np.array([[0.3, -0.2, 2.0]])
        full_pixel, _ = camera.project(point)
        half_pixel, _ = half.project(point)
        np.testing.assert_allclose(half_pixel, (full_pixel + 0.5) * 0.5 - 0.5, atol=1e-12)
        assert (half.width, half.height) == (16, 12)

    def test_relative_pose(self) -> None:
        """Test that the relative pose maps one camera's frame into the other's."""
        a = _posed(0.2, np.array([0.0, 0.1, 0.0]))
        b = _posed(-0.4, np.array([0.5, 0.0, 0.2]))
        R_rel, t_rel = a.relative_to(b)
        world = np.array([[0.3, 0.4, 3.0]])
        np.testing.assert_allclose(
            a.to_camera(world) @ R_rel.T + t_rel, b.to_camera(world), atol=1e-12
        )

    def test_validate_rejects_bad_rotation(self) -> None:
        """Test that a non-orthonormal rotation is a validation error."""
        camera = CameraModel(simple_camera().K, np.eye(3) * 1.1, np.zeros(3), 32, 24)
        with pytest.raises(SceneValidationError, match="not orthonormal"):
            camera.validate("view 'a'")

    def test_validate_rejects_tiny_raster(self) -> None:
        """Test that a raster below 2x2 is rejected."""
        camera = CameraModel(simple_camera().K, np.eye(3), np.zeros(3), 1, 5)
        with pytest.raises(SceneValidationError, match="at least 2x2"):
            camera.validate()


class TestHypotheses:
    """Tests for plane hypotheses and their rasters."""

    def test_angles_describe_normals(self) -> None:
        """Test that theta=0 faces the camera and angles invert the construction."""
        np.testing.assert_allclose(
            normals_from_angles(np.array(0.0), np.array(0.0)), [0.0, 0.0, -1.0]
        )
        normal = normals_from_angles(np.array([0.4]), np.array([2.0]))
        theta, phi = angles_from_normals(normal)
        assert theta[0] == pytest.approx(0.4)
        assert phi[0] == pytest.approx(2.0)

    def test_face_camera_flips_backfacing(self) -> None:
        """Test that normals are flipped toward the camera and normalized."""
        rays = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
        normals = face_camera(np.array([[0.0, 0.0, 2.0], [0.0, 1.0, -1.0]]), rays)
        np.testing.assert_allclose(normals[0], [0.0, 0.0, -1.0])
        np.testing.assert_allclose(np.linalg.norm(normals, axis=1), 1.0)
        assert (np.sum(normals * rays, axis=1) < 0).all()

    def test_fronto_parallel_map(self) -> None:
        """Test that fronto-parallel normals point back along the viewing rays."""
        camera = simple_camera(width=6, height=4)
        hypotheses = HypothesisMap.fronto_parallel(np.full((4, 6), 2.0), camera)
        np.testing.assert_allclose(hypotheses.normal, -viewing_rays(camera))
        assert hypotheses.at(1, 2).depth == 2.0

    def test_upsampled_is_nearest(self) -> None:
        """Test that upsampling copies each coarse value into its block."""
        depth = np.array([[1.0, 2.0], [3.0, 4.0]])
        normal = np.zeros((2, 2, 3))
        normal[..., 2] = -1.0
        up = HypothesisMap(depth, normal).upsampled(4, 4)
        assert up.depth[:2, :2].tolist() == [[1.0, 1.0], [1.0, 1.0]]
        assert up.depth[3, 3] == 4.0

    def test_validity(self) -> None:
        """Test the depth range, unit length and facing conditions."""
        ray = np.array([0.0, 0.0, 1.0])
        assert Hypothesis(2.0, (0.0, 0.0, -1.0)).is_valid(ray, (1.0, 3.0))
        assert not Hypothesis(4.0, (0.0, 0.0, -1.0)).is_valid(ray, (1.0, 3.0))
        assert not Hypothesis(2.0, (0.0, 0.0, 1.0)).is_valid(ray, (1.0, 3.0))


class TestCostWeights:
    """Tests for the four cost weights."""

    def test_normalized(self) -> None:
        """Test normalizing the default starting weights."""
        weights = CostWeights.from_sequence([1.0, 0.2, 0.2, 0.2]).normalized()
        assert weights.as_array().sum() == pytest.approx(1.0)
        assert weights.matching == pytest.approx(1.0 / 1.6)

    def test_without_reprojection(self) -> None:
        """Test that dropping w_r redistributes its mass proportionally."""
        weights = CostWeights(0.4, 0.2, 0.2, 0.2).without_reprojection()
        assert weights.reprojection == 0.0
        assert weights.matching == pytest.approx(0.5)
        assert weights.color == pytest.approx(0.25)

    def test_all_inactive(self) -> None:
        """Test that at least one term must stay active."""
        with pytest.raises(ConfigurationError):
            CostWeights(0.25, 0.25, 0.25, 0.25).restricted([False] * 4)

    def test_check(self) -> None:
        """Test the simplex check with and without inactive terms."""
        CostWeights(0.7, 0.1, 0.1, 0.1).check(0.1)
        CostWeights(0.8, 0.0, 0.1, 0.1).check(0.1, [True, False, True, True])
        with pytest.raises(ConfigurationError, match="violate the simplex"):
            CostWeights(0.8, 0.0, 0.1, 0.1).check(0.1)
        with pytest.raises(ConfigurationError):
            CostWeights(0.5, 0.1, 0.1, 0.1).check(0.1)

    def test_str(self) -> None:
        """Test the human-readable form used in logs and the CLI."""
        text = str(CostWeights(0.7, 0.1, 0.1, 0.1))
        assert text == "matching=0.7000 reprojection=0.1000 color=0.1000 depth=0.1000"
