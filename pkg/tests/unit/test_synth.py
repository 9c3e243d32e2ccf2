"""Tests for synthetic scene generation."""

import numpy as np
import pytest

from edgemvs.core.model.errors import SynthSpecError
from edgemvs.core.synth import (
    MAX_OCTAVES,
    Rectangle,
    SynthSpec,
    generate_synthetic_scene,
    texture_octaves,
)

BACKDROP = Rectangle(x0=-10, x1=10, y0=-10, y1=10, depth=4.0)
FLAT = Rectangle(x0=-0.5, x1=0.6, y0=-0.45, y1=0.5, depth=2.0, texture_density=0.0)


class TestTextureOctaves:
    """Tests for texture_octaves."""

    def test_octaves_reach_detail(self) -> None:
        """Test that octaves are added until the finest cell spans at most detail_pixels."""
        spec = SynthSpec(width=64)
        assert texture_octaves(spec, BACKDROP) == 2
        fine = BACKDROP.model_copy(update={"texture_density": 8.0})
        assert texture_octaves(spec, fine) == 1
        assert texture_octaves(spec, FLAT) == 0

    def test_octaves_capped(self) -> None:
        """Test the cap for a detail far below one pixel."""
        spec = SynthSpec(width=64, detail_pixels=1e-3)
        assert texture_octaves(spec, BACKDROP) == MAX_OCTAVES


class TestGenerateScene:
    """Tests for generate_synthetic_scene."""

    def test_ground_truth_per_surface(self) -> None:
        """Test constant depth per surface, labels offset by one and a gray flat plane."""
        scene, truth = generate_synthetic_scene(SynthSpec(surfaces=[BACKDROP, FLAT]))
        for view, depth, surface in zip(scene.views, truth.depth, truth.surface, strict=True):
            assert (depth[surface == 0] == 4.0).all()
            assert (depth[surface == 1] == 2.0).all()
            np.testing.assert_array_equal(view.segmentation, surface + 1)
            assert (view.image[surface == 1] == FLAT.base_intensity).all()
            assert view.image[surface == 0].std() > 10.0

    def test_flat_surface_gets_silhouette_points(self) -> None:
        """Test inset corners and edge midpoints on a surface with no texture."""
        scene, truth = generate_synthetic_scene(SynthSpec(surfaces=[BACKDROP, FLAT]))
        flat = [point for point in scene.sparse.points if point.position[2] == FLAT.depth]
        assert len(flat) == 8
        for point in flat:
            x, y, _ = point.position
            assert FLAT.x0 < x < FLAT.x1
            assert FLAT.y0 < y < FLAT.y1
            assert len(point.observations) >= 2
            for obs in point.observations:
                row, col = round(obs.v), round(obs.u)
                assert truth.surface[obs.view][row, col] == 1

    def test_only_flat_surfaces(self) -> None:
        """Test a scene whose every surface is flat still places outline points."""
        backdrop = BACKDROP.model_copy(update={"texture_density": 0.0})
        scene, _ = generate_synthetic_scene(SynthSpec(surfaces=[backdrop, FLAT]))
        depths = {float(point.position[2]) for point in scene.sparse.points}
        assert FLAT.depth in depths

    def test_no_sparse_points(self) -> None:
        """Test that sparse_points=0 leaves the point set empty."""
        scene, _ = generate_synthetic_scene(
            SynthSpec(surfaces=[BACKDROP, FLAT], sparse_points=0)
        )
        assert len(scene.sparse.points) == 0

    def test_overlap_at_same_depth(self) -> None:
        """Test that coplanar overlapping surfaces are rejected."""
        twin = FLAT.model_copy(update={"x0": 0.0, "x1": 1.0})
        with pytest.raises(SynthSpecError, match="overlap"):
            generate_synthetic_scene(SynthSpec(surfaces=[BACKDROP, FLAT, twin]))
