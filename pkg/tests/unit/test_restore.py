"""Tests for triangulation, plane classification and depth restoration."""

import numpy as np
import pytest

from edgemvs.core.model.camera import CameraModel
from edgemvs.core.model.config import EngineConfig
from edgemvs.core.model.errors import ContractError
from edgemvs.core.model.scene import Observation, SceneBundle, SparsePoint, SparsePointSet
from edgemvs.core.restore.pipeline import restore
from edgemvs.core.restore.planes import NON_PLANAR, classify_triangle, covered_pixels
from edgemvs.core.restore.refine import Provenance, refine_depth
from edgemvs.core.restore.triangulation import (
    ALL_PIXELS,
    cluster_and_triangulate,
    interpolate_triangle_depth,
)
from edgemvs.core.synth import GroundTruth
from tests.factories import flat_view, simple_camera


def _sparse(
    camera: CameraModel, pixels: list[tuple[float, float]], depths: list[float]
) -> SparsePointSet:
    """One single-view observation per pixel, placed at the given depth."""
    positions = camera.backproject(np.asarray(pixels, dtype=np.float64), np.asarray(depths))
    return SparsePointSet(
        tuple(
            SparsePoint(position=position, observations=(Observation(0, u, v),))
            for position, (u, v) in zip(positions, pixels, strict=True)
        )
    )


TRIANGLE = [(4.0, 4.0), (28.0, 4.0), (4.0, 20.0)]


class TestTriangulation:
    """Tests for cluster_and_triangulate and triangle interpolation."""

    def test_three_points(self) -> None:
        """Test that three observations give one triangle."""
        camera = simple_camera()
        clusters = cluster_and_triangulate(flat_view(), _sparse(camera, TRIANGLE, [2.0] * 3), 0)
        assert len(clusters) == 1
        assert clusters[0].triangle_count == 1
        assert clusters[0].label == 1
        np.testing.assert_allclose(clusters[0].depths, 2.0)

    def test_convex_quad(self) -> None:
        """Test that four convex points give two triangles."""
        camera = simple_camera()
        quad = [(2.0, 2.0), (20.0, 2.0), (20.0, 18.0), (2.0, 18.0)]
        clusters = cluster_and_triangulate(flat_view(), _sparse(camera, quad, [2.0] * 4), 0)
        assert clusters[0].triangle_count == 2

    def test_collinear_points(self) -> None:
        """Test that collinear observations carry no triangle."""
        camera = simple_camera()
        line = [(2.0, 2.0), (6.0, 6.0), (10.0, 10.0), (14.0, 14.0)]
        clusters = cluster_and_triangulate(flat_view(), _sparse(camera, line, [2.0] * 4), 0)
        assert clusters[0].triangle_count == 0
        assert len(clusters[0]) == 4

    def test_triangles_stay_inside_one_instance(self) -> None:
        """Test that no triangle joins observations of two labels."""
        camera = simple_camera()
        segmentation = np.ones((24, 32), dtype=np.int32)
        segmentation[:, 16:] = 2
        view = flat_view(segmentation=segmentation)
        rng = np.random.default_rng(5)
        pixels = [(float(u), float(v)) for u, v in rng.uniform([0, 0], [31, 23], (30, 2))]
        clusters = cluster_and_triangulate(view, _sparse(camera, pixels, [3.0] * 30), 0)
        assert sorted(c.label for c in clusters) == [1, 2]
        for cluster in clusters:
            for triangle in range(cluster.triangle_count):
                vertices = np.rint(cluster.vertices(triangle)).astype(int)
                labels = segmentation[vertices[:, 1], vertices[:, 0]]
                assert (labels == cluster.label).all()

    def test_without_segmentation(self) -> None:
        """Test that every observation joins one cluster when labels are ignored."""
        camera = simple_camera()
        segmentation = np.ones((24, 32), dtype=np.int32)
        segmentation[:, 16:] = 2
        sparse = _sparse(camera, [(2.0, 2.0), (28.0, 3.0), (10.0, 20.0)], [2.0, 3.0, 4.0])
        clusters = cluster_and_triangulate(
            flat_view(segmentation=segmentation), sparse, 0, use_segmentation=False
        )
        assert [c.label for c in clusters] == [ALL_PIXELS]
        assert clusters[0].triangle_count == 1

    def test_no_observations(self) -> None:
        """Test that a view nobody observes has no clusters."""
        assert cluster_and_triangulate(flat_view(), SparsePointSet(), 0) == []

    def test_interpolation(self) -> None:
        """Test vertex snapping, the centroid and points outside."""
        vertices = np.array([[0.0, 0.0], [6.0, 0.0], [3.0, 3.0 * np.sqrt(3.0)]])
        depths = np.array([1.0, 2.0, 3.0])
        assert interpolate_triangle_depth((6.0, 0.0), vertices, depths) == 2.0
        centroid = tuple(vertices.mean(axis=0))
        assert interpolate_triangle_depth(centroid, vertices, depths) == pytest.approx(2.0)
        with pytest.raises(ContractError, match="outside the triangle"):
            interpolate_triangle_depth((10.0, 10.0), vertices, depths)

    def test_locate(self) -> None:
        """Test point location inside and outside the mesh."""
        camera = simple_camera()
        cluster = cluster_and_triangulate(flat_view(), _sparse(camera, TRIANGLE, [2.0] * 3), 0)[0]
        assert cluster.locate(np.array([[8.0, 8.0], [30.0, 22.0]])).tolist() == [0, -1]


class TestPlaneClassification:
    """Tests for classify_triangle."""

    def test_covered_pixels(self) -> None:
        """Test pixel centers on and inside a small triangle."""
        rows, cols = covered_pixels(np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]), (5, 5))
        assert sorted(zip(rows.tolist(), cols.tolist(), strict=True)) == [
            (0, 0),
            (0, 1),
            (0, 2),
            (1, 0),
            (1, 1),
            (2, 0),
        ]

    def test_affine_mono_is_planar(self) -> None:
        """Test that a plane in monocular depth is found with every pixel an inlier."""
        rows, cols = np.indices((20, 20))
        mono = 0.01 * cols + 0.02 * rows + 0.1
        vertices = np.array([[0.0, 0.0], [15.0, 0.0], [0.0, 15.0]])
        fit = classify_triangle(vertices, mono, 5e-3, 0.7, np.random.default_rng(0), 100)
        assert fit.planar
        assert fit.inlier_ratio == 1.0
        assert fit.coefficients == pytest.approx((0.01, 0.02, 0.1), abs=1e-9)

    def test_noise_is_not_planar(self) -> None:
        """Test that random monocular depth fails the ratio test."""
        mono = np.random.default_rng(1).uniform(0, 1, (20, 20))
        vertices = np.array([[0.0, 0.0], [15.0, 0.0], [0.0, 15.0]])
        fit = classify_triangle(vertices, mono, 5e-3, 0.7, np.random.default_rng(0), 200)
        assert not fit.planar
        assert fit.inlier_ratio < 0.7

    def test_tiny_triangle(self) -> None:
        """Test that fewer than three covered pixels is non-planar."""
        vertices = np.array([[0.1, 0.1], [0.4, 0.1], [0.1, 0.4]])
        fit = classify_triangle(vertices, np.zeros((5, 5)), 5e-3, 0.7, np.random.default_rng(0))
        assert fit == NON_PLANAR


class TestRefineDepth:
    """Tests for refine_depth routing."""

    def test_planar_triangle_and_extension(self) -> None:
        """Test interpolation inside and plane extension outside a planar triangle."""
        camera = simple_camera()
        cols = np.indices((24, 32))[1]
        view = flat_view(mono_depth=1.0 + 0.01 * cols)
        clusters = cluster_and_triangulate(view, _sparse(camera, TRIANGLE, [3.0] * 3), 0)
        restored = refine_depth(clusters, view, 5e-3, 0.7, np.random.default_rng(0), 100)
        assert restored.valid.all()
        np.testing.assert_allclose(restored.depth, 3.0, rtol=1e-9)
        assert restored.provenance[8, 8] == Provenance.TRIANGLE_INTERP
        assert restored.provenance[23, 31] == Provenance.PLANE_PROJECT

    def test_non_planar_proportional_mapping(self) -> None:
        """Test that outside a non-planar triangle depth follows the monocular ratio."""
        camera = simple_camera()
        mono = np.random.default_rng(2).uniform(1.0, 2.0, (24, 32))
        view = flat_view(mono_depth=mono)
        clusters = cluster_and_triangulate(view, _sparse(camera, TRIANGLE, [3.0] * 3), 0)
        restored = refine_depth(clusters, view, 5e-3, 0.7, np.random.default_rng(0), 200)
        assert restored.provenance[8, 8] == Provenance.GEOM_REFINED
        assert restored.depth[8, 8] == pytest.approx(3.0)
        assert restored.provenance[23, 0] == Provenance.PROPORTIONAL_MAP
        assert restored.depth[23, 0] == pytest.approx(3.0 * mono[23, 0] / mono[20, 4])

    def test_too_few_observations_take_nearest(self) -> None:
        """Test the nearest-observation fallback for an instance without triangles."""
        camera = simple_camera()
        view = flat_view()
        sparse = _sparse(camera, [(2.0, 2.0), (28.0, 20.0)], [2.0, 5.0])
        restored = refine_depth(
            cluster_and_triangulate(view, sparse, 0), view, 5e-3, 0.7, np.random.default_rng(0)
        )
        assert restored.depth[0, 0] == pytest.approx(2.0)
        assert restored.depth[23, 31] == pytest.approx(5.0)
        assert (restored.provenance == Provenance.PLANE_PROJECT_FALLBACK).all()

    def test_unobserved_instance_stays_invalid(self) -> None:
        """Test that an instance with no observation has no restored depth."""
        camera = simple_camera()
        segmentation = np.ones((24, 32), dtype=np.int32)
        segmentation[:, 20:] = 2
        view = flat_view(segmentation=segmentation)
        sparse = _sparse(camera, [(4.0, 4.0), (10.0, 4.0)], [2.0, 2.0])
        clusters = cluster_and_triangulate(view, sparse, 0)
        restored = refine_depth(clusters, view, 5e-3, 0.7, np.random.default_rng(0))
        assert restored.valid[:, :20].all()
        assert not restored.valid[:, 20:].any()
        assert (restored.depth[:, 20:] == -1.0).all()
        assert restored.counts()["invalid"] == 24 * 12

    def test_unlabeled_pixels_stay_invalid(self) -> None:
        """Test that observations on label 0 join no cluster and leave those pixels Invalid."""
        camera = simple_camera()
        segmentation = np.ones((24, 32), dtype=np.int32)
        segmentation[:, 16:] = 0
        view = flat_view(segmentation=segmentation)
        labeled = [(2.0, 2.0), (12.0, 3.0), (4.0, 20.0)]
        unlabeled = [(20.0, 2.0), (30.0, 4.0), (24.0, 20.0)]
        sparse = _sparse(camera, labeled + unlabeled, [2.0] * 6)
        clusters = cluster_and_triangulate(view, sparse, 0)
        assert [c.label for c in clusters] == [1]
        assert len(clusters[0]) == 3

        restored = refine_depth(clusters, view, 5e-3, 0.7, np.random.default_rng(0))
        assert restored.valid[:, :16].all()
        assert not restored.valid[:, 16:].any()
        assert (restored.provenance[:, 16:] == Provenance.INVALID).all()


class TestRestore:
    """Tests for the restoration pipeline on synthetic scenes."""

    def test_recovers_fronto_parallel_planes(
        self, tiny_scene: tuple[SceneBundle, GroundTruth]
    ) -> None:
        """Test exact depth on every pixel of each instance holding at least three points."""
        scene, truth = tiny_scene
        engine = EngineConfig(ransac_iterations=100)
        for index, view in enumerate(scene.views):
            restored = restore(view, scene.sparse, index, engine)
            clusters = cluster_and_triangulate(view, scene.sparse, index)
            seeded = [c.label for c in clusters if len(c) >= 3]
            assert seeded
            region = np.isin(view.segmentation, seeded)
            assert restored.valid[region].all()
            np.testing.assert_allclose(
                restored.depth[region], truth.depth[index][region], rtol=1e-6
            )

    def test_deterministic(self, tiny_scene: tuple[SceneBundle, GroundTruth]) -> None:
        """Test that the same seed gives the same raster."""
        scene, _ = tiny_scene
        engine = EngineConfig(ransac_iterations=50, seed=4)
        first = restore(scene.views[1], scene.sparse, 1, engine)
        second = restore(scene.views[1], scene.sparse, 1, engine)
        np.testing.assert_array_equal(first.depth, second.depth)
        np.testing.assert_array_equal(first.provenance, second.provenance)

    def test_no_sparse_points(self, tiny_scene: tuple[SceneBundle, GroundTruth]) -> None:
        """Test that without observations every pixel is invalid."""
        scene, _ = tiny_scene
        restored = restore(scene.views[0], SparsePointSet(), 0, EngineConfig())
        assert not restored.valid.any()
        assert (restored.depth == -1.0).all()

    def test_without_segmentation_everything_valid(
        self, tiny_scene: tuple[SceneBundle, GroundTruth]
    ) -> None:
        """Test that one global mesh gives every pixel a positive depth."""
        scene, _ = tiny_scene
        restored = restore(
            scene.views[0], scene.sparse, 0, EngineConfig(ransac_iterations=50), False
        )
        assert restored.valid.all()
        assert (restored.depth > 0).all()
