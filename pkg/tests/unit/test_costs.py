"""Tests for the geometric, color and supervision cost terms."""

from hypothesis import given, settings
from hypothesis.extra.numpy import arrays
import hypothesis.strategies as st
import numpy as np
import pytest

from edgemvs.core.match.costs import (
    aggregated_cost,
    best_views,
    color_gaps,
    color_gradient_error,
    depth_difference_error,
    instance_laplacian,
    multi_scale_cost,
    normalized_terms,
    patch_color_error,
    reprojection_error,
)
from edgemvs.core.model.config import EngineConfig
from edgemvs.core.model.hypothesis import CostWeights
from edgemvs.core.model.scene import SceneBundle
from edgemvs.core.synth import GroundTruth

depth_values = arrays(np.float64, 16, elements=st.floats(-2.0, 10.0, allow_nan=False))


class TestSimpleTerms:
    """Tests for the closed-form terms."""

    def test_laplacian_of_ramp(self) -> None:
        """Test that a linear ramp has no curvature away from the border."""
        ramp = np.tile(np.arange(10.0), (8, 1))
        labels = np.ones(ramp.shape, dtype=np.int32)
        lap = instance_laplacian(ramp, labels)
        np.testing.assert_allclose(lap[1:-1, 1:-1], 0.0, atol=1e-12)
        assert np.isnan(lap[0]).all() and np.isnan(lap[:, -1]).all()
        spike = np.zeros((5, 5))
        spike[2, 2] = 255.0
        spiked = instance_laplacian(spike, np.ones((5, 5), dtype=np.int32))
        assert spiked[2, 2] == -4.0
        assert spiked[1, 2] == 1.0

    def test_laplacian_undefined_across_instances(self) -> None:
        """Test that pixels touching another label get no value."""
        step = np.zeros((6, 8))
        step[:, 4:] = 200.0
        labels = np.ones(step.shape, dtype=np.int32)
        labels[:, 4:] = 2
        lap = instance_laplacian(step, labels)
        assert np.isnan(lap[1:-1, 3:5]).all()
        np.testing.assert_array_equal(lap[1:-1, 1:3], 0.0)
        np.testing.assert_array_equal(lap[1:-1, 5:7], 0.0)
        merged = instance_laplacian(step, np.ones(step.shape, dtype=np.int32))
        assert merged[2, 3] == pytest.approx(200.0 / 255.0)

    def test_multi_scale_mean(self) -> None:
        """Test averaging the current cost with every coarser one."""
        assert multi_scale_cost([0.2, 0.4]) == pytest.approx(0.3)
        np.testing.assert_allclose(
            multi_scale_cost([np.array([0.0, 1.0]), np.array([1.0, 1.0]), np.array([2.0, 1.0])]),
            [1.0, 1.0],
        )

    def test_depth_difference(self) -> None:
        """Test the relative tolerance at two layers and invalid supervision."""
        assert depth_difference_error(1.04, 1.0, 0.05) == 0.0
        assert depth_difference_error(1.08, 1.0, 0.05) == 1.0
        assert depth_difference_error(1.08, 1.0, 0.1) == 0.0
        assert depth_difference_error(5.0, -1.0, 0.05) == 0.0

    @given(
        arrays(np.float64, 16, elements=st.floats(0.01, 10.0)),
        arrays(np.float64, 16, elements=st.floats(0.01, 10.0)),
        st.integers(0, 3),
    )
    @settings(max_examples=100, deadline=None)
    def test_depth_difference_is_indicator(
        self, estimate: np.ndarray, restored: np.ndarray, layer: int
    ) -> None:
        """Test the term against the relative threshold that widens per layer."""
        tolerance = EngineConfig().depth_tolerance_at(layer)
        error = depth_difference_error(estimate, restored, tolerance)
        expected = np.abs(estimate - restored) / restored > 0.05 * 2**layer
        np.testing.assert_array_equal(error, expected.astype(np.float64))

    @given(depth_values, st.floats(0.01, 1.0))
    @settings(max_examples=50, deadline=None)
    def test_depth_difference_silent_without_restoration(
        self, estimate: np.ndarray, tolerance: float
    ) -> None:
        """Test that invalid restored depth never contributes."""
        restored = np.where(np.arange(16) % 2 == 0, -1.0, 0.0)
        assert not depth_difference_error(estimate, restored, tolerance).any()

    def test_normalization_and_aggregation(self) -> None:
        """Test scaling each term into [0, 1] and the weighted sum."""
        terms = normalized_terms(
            np.array([0.8]), np.array([0.6]), np.array([3.0]), np.array([1.0]), 3.0
        )
        np.testing.assert_allclose(terms[:, 0], [0.4, 0.2, 1.0, 1.0])
        raw = np.array([[0.4], [0.2], [0.0], [1.0]])
        assert aggregated_cost(raw, CostWeights(0.25, 0.25, 0.25, 0.25))[0] == pytest.approx(0.4)

    def test_best_views(self) -> None:
        """Test keeping the cheapest sources with ties broken by index."""
        costs = np.array([[3.0, 1.0], [1.0, 1.0], [2.0, 0.0]])
        selected = best_views(costs, 2)
        assert selected[:, 0].tolist() == [False, True, True]
        assert selected[:, 1].tolist() == [True, False, True]


class TestViewTerms:
    """Tests for the terms that look into a source view."""

    def test_reprojection_round_trip(self, plane_scene: tuple[SceneBundle, GroundTruth]) -> None:
        """Test zero error with consistent depth and tau with unusable source depth."""
        scene, truth = plane_scene
        ref, src = scene.views[0].camera, scene.views[1].camera
        pixels = np.array([[20.0, 15.0], [24.0, 20.0], [30.0, 25.0]])
        depth = np.full(3, 4.0)
        consistent = reprojection_error(pixels, depth, ref, src, truth.depth[1], 3.0)
        np.testing.assert_allclose(consistent, 0.0, atol=1e-9)

        invalid = np.full(truth.depth[1].shape, -1.0)
        assert reprojection_error(pixels, depth, ref, src, invalid, 3.0).tolist() == [3.0] * 3

        skewed = reprojection_error(pixels, depth, ref, src, truth.depth[1] * 3.0, 3.0)
        assert (skewed > 0).all()
        assert (skewed <= 3.0).all()

    def test_color_gradient(self) -> None:
        """Test identical Laplacians, a clipped gap and a projection outside."""
        lap = np.zeros((4, 4))
        lap[1, 1] = 2.0
        other = lap + 10.0
        ref_pixels = np.array([[1, 1], [1, 1], [1, 1]])
        src_pixels = np.array([[1.0, 1.0], [1.0, 1.0], [5.0, 1.0]])
        same = color_gradient_error(lap, lap, ref_pixels, src_pixels, 3.0)
        assert same.tolist() == [0.0, 0.0, 3.0]
        shifted = color_gradient_error(lap, other, ref_pixels[:1], src_pixels[:1], 3.0)
        assert shifted.tolist() == [3.0]
        behind = color_gradient_error(
            lap, lap, ref_pixels[:1], src_pixels[:1], 3.0, in_front=np.array([False])
        )
        assert behind.tolist() == [3.0]

    def test_undefined_laplacian_is_unusable(self) -> None:
        """Test that NaN Laplacian samples are set aside at full truncation."""
        lap = np.full((4, 4), np.nan)
        lap[1:-1, 1:-1] = 0.5
        ref_pixels = np.array([[1, 1], [0, 0], [2, 2]])
        src_pixels = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 3.0]])
        gaps, usable = color_gaps(lap, lap, ref_pixels, src_pixels, 3.0)
        assert usable.tolist() == [True, False, False]
        assert gaps.tolist() == [0.0, 3.0, 3.0]

    def test_patch_color_error(self) -> None:
        """Test the weighted mean over usable samples and the empty column."""
        gaps = np.array([[0.0, 1.0], [2.0, 1.0], [3.0, 3.0]])
        weights = np.array([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]])
        usable = np.array([[True, False], [True, False], [False, False]])
        error = patch_color_error(gaps, weights, usable, 3.0)
        assert error.tolist() == [1.0, 3.0]
