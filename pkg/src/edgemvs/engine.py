"""Multi-view reconstruction: restoration, PatchMatch passes and fusion.

Each view's restoration and each view's solve within a pass is a pure
function of the scene, the configuration and a few picklable arrays, so the
views fan out across a process pool (processes, not threads: the kernels are
numpy-heavy Python loops that hold the GIL between vector operations). The
scene and its pyramids are built once per worker by the pool initializer.
"""

from __future__ import annotations

from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging
import os
from pathlib import Path
import time

import numpy as np

from edgemvs.__version__ import __version__
from edgemvs.core.fusion import FusionView, PointCloud, export_point_cloud
from edgemvs.core.match.pyramid import LayerView, build_pyramid, downsample_view
from edgemvs.core.match.solver import ViewSolution, solve_view
from edgemvs.core.model.camera import CameraModel, FloatArray
from edgemvs.core.model.config import RunConfig
from edgemvs.core.model.errors import ConfigurationError
from edgemvs.core.model.hypothesis import CostWeights
from edgemvs.core.model.scene import Observation, SceneBundle, SparsePoint, SparsePointSet
from edgemvs.core.restore.pipeline import restore
from edgemvs.core.restore.refine import RestoredDepthMap
from edgemvs.core.store.ply import write_ply
from edgemvs.core.store.scene_dir import write_view_outputs

logger = logging.getLogger(__name__)

# Below this many views the pool's spawn and pickling overhead outweighs the
# per-view work; stay sequential.
PARALLEL_THRESHOLD = 4
JOBS_ENV = "EDGEMVS_JOBS"
RUN_SUMMARY = "run.txt"
FUSED_CLOUD = "fused.ply"


def _resolve_jobs(requested: int | None, task_count: int) -> int:
    """Resolve the worker count: explicit arg > EDGEMVS_JOBS env > auto."""
    if requested is None:
        env_value = os.environ.get(JOBS_ENV, "").strip()
        if env_value.isdigit():
            requested = int(env_value)
    if requested is None:
        if task_count < PARALLEL_THRESHOLD:
            return 1
        requested = os.cpu_count() or 1
    return max(1, min(requested, task_count))


def solve_rng(seed: int, pass_index: int, view_index: int) -> np.random.Generator:
    """PatchMatch stream for one view in one pass."""
    return np.random.default_rng(np.random.SeedSequence([seed, pass_index + 1, view_index]))


def downsample_scene(scene: SceneBundle, factor: int) -> SceneBundle:
    """The scene at 1/factor resolution with observations moved to match."""
    if factor == 1:
        return scene
    views = tuple(downsample_view(view, factor) for view in scene.views)
    scales = [
        (small.camera.width / view.camera.width, small.camera.height / view.camera.height)
        for view, small in zip(scene.views, views, strict=True)
    ]
    points = tuple(
        SparsePoint(
            position=point.position,
            observations=tuple(
                Observation(
                    obs.view,
                    (obs.u + 0.5) * scales[obs.view][0] - 0.5,
                    (obs.v + 0.5) * scales[obs.view][1] - 0.5,
                )
                for obs in point.observations
            ),
        )
        for point in scene.sparse.points
    )
    return SceneBundle(views, SparsePointSet(points), scene.depth_range)


@dataclass(eq=False)
class _Context:
    """Per-process read-only state shared by every task."""

    scene: SceneBundle
    config: RunConfig
    pyramids: list[list[LayerView]]

    @classmethod
    def build(cls, scene: SceneBundle, config: RunConfig) -> _Context:
        layers = config.engine.layers
        return cls(scene, config, [build_pyramid(view, layers) for view in scene.views])


# Per-process context for pool workers, set by the initializer after spawn.
_worker_context: _Context | None = None


def _init_worker(scene: SceneBundle, config: RunConfig) -> None:
    global _worker_context
    _worker_context = _Context.build(scene, config)


def _restore_view(context: _Context, view_index: int) -> RestoredDepthMap:
    scene = context.scene
    return restore(
        scene.views[view_index],
        scene.sparse,
        view_index,
        context.config.engine,
        use_segmentation=context.config.ablation.segmentation,
    )


@dataclass(frozen=True, eq=False)
class _SolveTask:
    view_index: int
    pass_index: int
    restored: FloatArray | None
    prior_depths: list[FloatArray | None] | None


def _solve(context: _Context, task: _SolveTask) -> ViewSolution:
    config = context.config
    return solve_view(
        context.pyramids,
        task.view_index,
        task.restored,
        context.scene.depth_range,
        config.engine,
        config.ablation,
        solve_rng(config.engine.seed, task.pass_index, task.view_index),
        task.prior_depths,
    )


def _restore_in_worker(view_index: int) -> RestoredDepthMap:
    assert _worker_context is not None
    return _restore_view(_worker_context, view_index)


def _solve_in_worker(task: _SolveTask) -> ViewSolution:
    assert _worker_context is not None
    return _solve(_worker_context, task)


@dataclass(eq=False)
class ReconstructionResult:
    """Finest-layer maps per view plus what the run summary reports."""

    names: list[str]
    cameras: list[CameraModel]
    images: list[FloatArray]
    solutions: list[ViewSolution]
    restored: list[RestoredDepthMap | None]
    runtime_seconds: float = 0.0
    peak_raster_bytes: int = 0
    pass_weights: list[list[CostWeights]] = field(default_factory=list)

    @property
    def depths(self) -> list[FloatArray]:
        return [s.depth for s in self.solutions]

    @property
    def normals(self) -> list[FloatArray]:
        return [s.normal for s in self.solutions]

    def weight_history(self) -> list[CostWeights]:
        """Weights after every M-step of the final pass, all views."""
        return [w for s in self.solutions for w in s.weight_history]

    def fuse(self, config: RunConfig) -> PointCloud:
        engine = config.engine
        views = [
            FusionView(s.depth, s.normal, camera, image)
            for s, camera, image in zip(self.solutions, self.cameras, self.images, strict=True)
        ]
        return export_point_cloud(
            views,
            engine.fusion_min_views,
            engine.fusion_depth_agreement,
            engine.fusion_reprojection_px,
        )

    def summary(self) -> dict[str, str]:
        """key=value lines of ``run.txt``."""
        lines = {
            "version": __version__,
            "views": str(len(self.names)),
            "runtime_seconds": f"{self.runtime_seconds:.3f}",
            "peak_raster_bytes": str(self.peak_raster_bytes),
        }
        for name, solution in zip(self.names, self.solutions, strict=True):
            lines[f"weights.{name}"] = " ".join(
                f"{w:.6f}" for w in solution.weights.as_array()
            )
        return lines


class Reconstructor:
    """Runs restoration, the PatchMatch passes and fusion for one scene."""

    def __init__(
        self,
        config: RunConfig,
        progress: Callable[[str], None] | None = None,
    ) -> None:
        """Initialize with a run configuration.

        Args:
            config: Engine parameters, ablation toggles and thread cap
            progress: Called with one line per finished stage
        """
        self.config = config
        self.progress = progress or (lambda _message: None)

    def reconstruct(self, scene: SceneBundle) -> ReconstructionResult:
        """Per-view depth and normal maps at the working resolution.

        Raises:
            ConfigurationError: If the scene has fewer than 2 views
            SceneValidationError: If the scene is inconsistent
        """
        if len(scene.views) < 2:
            raise ConfigurationError(
                f"multi-view stereo needs at least 2 views, got {len(scene.views)}"
            )
        started = time.perf_counter()
        scene.validate()
        engine = self.config.engine
        working = downsample_scene(scene, engine.downsample)
        view_count = len(working.views)
        jobs = _resolve_jobs(self.config.threads, view_count)
        logger.info("reconstructing %d views with %d job(s)", view_count, jobs)

        if jobs <= 1:
            context = _Context.build(working, self.config)
            restored = self._restore_all(
                view_count, lambda: [_restore_view(context, i) for i in range(view_count)]
            )
            solutions, pass_weights = self._passes(
                restored, lambda tasks: [_solve(context, t) for t in tasks]
            )
        else:
            with ProcessPoolExecutor(
                max_workers=jobs, initializer=_init_worker, initargs=(working, self.config)
            ) as pool:
                # map preserves input order, keeping results deterministic.
                restored = self._restore_all(
                    view_count, lambda: list(pool.map(_restore_in_worker, range(view_count)))
                )
                solutions, pass_weights = self._passes(
                    restored, lambda tasks: list(pool.map(_solve_in_worker, tasks))
                )

        # image, laplacian and mono depth are float64 rasters of the same size
        scene_bytes = sum(
            view.image.size * 8 * 3 + view.segmentation.nbytes for view in working.views
        )
        return ReconstructionResult(
            names=[view.name for view in working.views],
            cameras=[view.camera for view in working.views],
            images=[view.image.astype(np.float64) for view in working.views],
            solutions=solutions,
            restored=restored,
            runtime_seconds=time.perf_counter() - started,
            peak_raster_bytes=scene_bytes + max(s.peak_bytes for s in solutions),
            pass_weights=pass_weights,
        )

    def _restore_all(
        self, view_count: int, run: Callable[[], list[RestoredDepthMap]]
    ) -> list[RestoredDepthMap | None]:
        ablation = self.config.ablation
        if not (ablation.restoration_init or ablation.restoration_supervision):
            return [None] * view_count
        maps = run()
        for index, restored in enumerate(maps):
            logger.debug("view %d restoration: %s", index, restored.counts())
        self.progress(f"restored {len(maps)} views")
        return list(maps)

    def _passes(
        self,
        restored: list[RestoredDepthMap | None],
        run: Callable[[list[_SolveTask]], list[ViewSolution]],
    ) -> tuple[list[ViewSolution], list[list[CostWeights]]]:
        engine = self.config.engine
        prior: list[FloatArray | None] | None = None
        solutions: list[ViewSolution] = []
        pass_weights: list[list[CostWeights]] = []
        for pass_index in range(engine.passes):
            tasks = [
                _SolveTask(
                    view_index=index,
                    pass_index=pass_index,
                    restored=None if rest is None else rest.depth,
                    prior_depths=prior,
                )
                for index, rest in enumerate(restored)
            ]
            solutions = run(tasks)
            pass_weights.append([w for s in solutions for w in s.weight_history])
            prior = [s.depth for s in solutions]
            self.progress(f"pass {pass_index + 1}/{engine.passes} done")
        return solutions, pass_weights


def reconstruct(
    scene: SceneBundle,
    config: RunConfig,
    progress: Callable[[str], None] | None = None,
) -> ReconstructionResult:
    """Functional entry point around :class:`Reconstructor`."""
    return Reconstructor(config, progress).reconstruct(scene)


def write_reconstruction(
    result: ReconstructionResult, out_dir: str | Path, config: RunConfig
) -> Path:
    """Write depth/normal PFMs, ``fused.ply`` and ``run.txt``; returns the PLY path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, solution in zip(result.names, result.solutions, strict=True):
        write_view_outputs(out_dir, name, solution.depth, solution.normal)
    cloud = result.fuse(config)
    ply_path = out_dir / FUSED_CLOUD
    write_ply(ply_path, cloud.positions, cloud.normals, cloud.colors)
    summary = result.summary() | {"fused_points": str(len(cloud))}
    (out_dir / RUN_SUMMARY).write_text(
        "".join(f"{key}={value}\n" for key, value in summary.items())
    )
    return ply_path


def read_run_summary(path: str | Path) -> dict[str, str]:
    """Parse ``run.txt``; a missing file gives an empty mapping."""
    path = Path(path)
    if not path.exists():
        return {}
    entries = {}
    for line in path.read_text().splitlines():
        key, sep, value = line.partition("=")
        if sep:
            entries[key.strip()] = value.strip()
    return entries
