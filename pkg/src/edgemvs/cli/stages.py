"""Single-stage debugging commands: restore, occlusion and patch-debug.

Each runs one stage at the working resolution (after ``downsample``) and
writes its rasters or overlays under OUT_DIR, one file per view.
"""

from __future__ import annotations

from pathlib import Path

import click
import numpy as np

from edgemvs.cli.common import CliState, load_working_scene, pass_state, select_views, stage
from edgemvs.core.deform.sampling import build_patch
from edgemvs.core.deform.texture import compute_textureness
from edgemvs.core.guidance.maps import build_guidance
from edgemvs.core.match.layer import CROSS_RAYS
from edgemvs.core.restore.pipeline import restore
from edgemvs.core.store.images import write_rgb
from edgemvs.core.store.pfm import write_depth_map
from edgemvs.report.overlays import (
    describe_patch,
    occlusion_overlay,
    patch_overlay,
    provenance_overlay,
)

SCENE_ARG = click.argument(
    "scene_dir", type=click.Path(exists=True, file_okay=False, path_type=Path)
)
OUT_ARG = click.argument("out_dir", type=click.Path(file_okay=False, path_type=Path))
VIEW_OPT = click.option("--view", default=None, help="Only this view (default: all)")


@click.command()
@SCENE_ARG
@OUT_ARG
@VIEW_OPT
@pass_state
def restore_cmd(state: CliState, scene_dir: Path, out_dir: Path, view: str | None) -> None:
    """Restored depth (restored/<view>.pfm) and provenance (provenance/<view>.png)."""
    config = state.config
    scene = load_working_scene(scene_dir, config)
    with stage("restore"):
        (out_dir / "restored").mkdir(parents=True, exist_ok=True)
        (out_dir / "provenance").mkdir(parents=True, exist_ok=True)
        for index, bundle in select_views(scene, view):
            restored = restore(
                bundle,
                scene.sparse,
                index,
                config.engine,
                use_segmentation=config.ablation.segmentation,
            )
            write_depth_map(restored.depth, out_dir / "restored" / f"{bundle.name}.pfm")
            write_rgb(provenance_overlay(restored), out_dir / "provenance" / f"{bundle.name}.png")
            counts = ", ".join(f"{tag}={n}" for tag, n in restored.counts().items() if n)
            state.echo(f"{bundle.name}: {counts}")


@click.command()
@SCENE_ARG
@OUT_ARG
@VIEW_OPT
@pass_state
def occlusion_cmd(state: CliState, scene_dir: Path, out_dir: Path, view: str | None) -> None:
    """Occlusion overlays (occlusion/<view>.png): continuous blue, discontinuous red."""
    config = state.config
    scene = load_working_scene(scene_dir, config)
    with stage("occlusion"):
        (out_dir / "occlusion").mkdir(parents=True, exist_ok=True)
        for _, bundle in select_views(scene, view):
            guidance = build_guidance(
                bundle.segmentation, bundle.mono_depth, config.engine, config.ablation
            )
            overlay = occlusion_overlay(bundle.image, guidance.occlusion)
            write_rgb(overlay, out_dir / "occlusion" / f"{bundle.name}.png")
            state.echo(
                f"{bundle.name}: {int(guidance.continuous.sum())} continuous, "
                f"{int(guidance.walls.sum())} discontinuous boundary pixels"
            )


@click.command()
@SCENE_ARG
@OUT_ARG
@click.option("--view", required=True, help="View holding the pixel")
@click.option(
    "--pixel",
    nargs=2,
    type=int,
    required=True,
    metavar="ROW COL",
    help="Patch center",
)
@pass_state
def patch_debug_cmd(
    state: CliState, scene_dir: Path, out_dir: Path, view: str, pixel: tuple[int, int]
) -> None:
    """Deformed patch of one pixel at the finest layer (patch/<view>_<row>_<col>.png/.txt).

    Samples are chosen on a flat cost field, so ties resolve to the earliest
    pixel of each fragment.
    """
    config = state.config
    engine, ablation = config.engine, config.ablation
    scene = load_working_scene(scene_dir, config)
    [(_, bundle)] = select_views(scene, view)
    with stage("patch-debug"):
        guidance = build_guidance(bundle.segmentation, bundle.mono_depth, engine, ablation)
        height, width = bundle.image.shape
        texture = None
        if ablation.mapping:
            texture = compute_textureness(bundle.image, engine.window_size)
        patch = build_patch(
            (pixel[0], pixel[1]),
            engine.ray_count if ablation.trajectories else CROSS_RAYS,
            guidance,
            engine.radius_at(width, height),
            0,
            np.zeros((height, width)),
            texture,
            engine.window_size,
        )
        (out_dir / "patch").mkdir(parents=True, exist_ok=True)
        stem = out_dir / "patch" / f"{bundle.name}_{pixel[0]}_{pixel[1]}"
        write_rgb(patch_overlay(bundle.image, guidance.occlusion, patch), stem.with_suffix(".png"))
        stem.with_suffix(".txt").write_text(describe_patch(patch))
    state.echo(
        f"{bundle.name} {pixel}: {len(patch.trajectories)} trajectories, "
        f"{len(patch.samples)} samples"
    )
