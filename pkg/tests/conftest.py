"""Shared test fixtures."""

from __future__ import annotations

from pathlib import Path

import pytest

from edgemvs.core.model.config import EngineConfig, RunConfig
from edgemvs.core.model.scene import SceneBundle
from edgemvs.core.store.scene_dir import save_scene, write_ground_truth
from edgemvs.core.synth import GroundTruth, Rectangle, SynthSpec, generate_synthetic_scene
from edgemvs.engine import JOBS_ENV


@pytest.fixture(autouse=True)
def _sequential_by_default(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep a developer's EDGEMVS_JOBS from changing how tests schedule work."""
    monkeypatch.delenv(JOBS_ENV, raising=False)


@pytest.fixture
def tiny_spec() -> SynthSpec:
    """Two textured planes seen by three cameras at 48x40."""
    return SynthSpec(width=48, height=40, views=3, sparse_points=40)


@pytest.fixture
def plane_spec() -> SynthSpec:
    """A single textured backdrop: no occlusion anywhere."""
    return SynthSpec(
        width=48,
        height=40,
        views=3,
        sparse_points=30,
        surfaces=[Rectangle(x0=-10, x1=10, y0=-10, y1=10, depth=4.0, texture_density=4.0)],
    )


@pytest.fixture
def tiny_scene(tiny_spec: SynthSpec) -> tuple[SceneBundle, GroundTruth]:
    return generate_synthetic_scene(tiny_spec)


@pytest.fixture
def plane_scene(plane_spec: SynthSpec) -> tuple[SceneBundle, GroundTruth]:
    return generate_synthetic_scene(plane_spec)


@pytest.fixture
def scene_dir(tmp_path: Path, tiny_scene: tuple[SceneBundle, GroundTruth]) -> Path:
    """The tiny scene on disk, ground truth under ``gt/``."""
    scene, truth = tiny_scene
    root = tmp_path / "scene"
    save_scene(scene, root)
    write_ground_truth(root / "gt", [view.name for view in scene.views], truth.depth)
    return root


@pytest.fixture
def fast_config() -> RunConfig:
    """Few layers, sweeps and rays so a full reconstruction takes seconds."""
    return RunConfig(
        engine=EngineConfig(
            ray_count=8,
            layers=2,
            sweeps=1,
            passes=1,
            ransac_iterations=100,
            refine_rounds=1,
        ),
        threads=1,
    )
