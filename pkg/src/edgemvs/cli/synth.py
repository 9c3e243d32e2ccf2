"""The ``edgemvs synth`` command."""

from __future__ import annotations

from pathlib import Path

import click

from edgemvs.cli.common import CliState, pass_state, stage
from edgemvs.core.model.errors import SynthSpecError
from edgemvs.core.store.scene_dir import save_scene, write_ground_truth
from edgemvs.core.synth import MonoMode, SynthSpec, generate_synthetic_scene

GT_DIR = "gt"


@click.command()
@click.argument("out_dir", type=click.Path(file_okay=False, path_type=Path))
@click.option(
    "--spec",
    "spec_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="YAML scene description (default: two textured planes)",
)
@click.option("--views", type=click.IntRange(min=2), default=None, help="Number of cameras")
@click.option("--width", type=click.IntRange(min=8), default=None, help="Image width")
@click.option("--height", type=click.IntRange(min=8), default=None, help="Image height")
@click.option(
    "--mono-mode",
    type=click.Choice([mode.value for mode in MonoMode]),
    default=None,
    help="How monocular depth distorts ground truth",
)
@pass_state
def synth_cmd(
    state: CliState,
    out_dir: Path,
    spec_path: Path | None,
    views: int | None,
    width: int | None,
    height: int | None,
    mono_mode: str | None,
) -> None:
    """Write a synthetic scene to OUT_DIR and its ground truth to OUT_DIR/gt."""
    updates: dict[str, object] = {
        key: value
        for key, value in {
            "views": views,
            "width": width,
            "height": height,
            "mono_mode": None if mono_mode is None else MonoMode(mono_mode),
            "seed": state.seed,
        }.items()
        if value is not None
    }
    with stage("synth"):
        spec = SynthSpec() if spec_path is None else SynthSpec.from_yaml(spec_path)
        try:
            spec = SynthSpec.model_validate(spec.model_dump() | updates)
        except ValueError as error:
            raise SynthSpecError(str(error)) from None
        scene, truth = generate_synthetic_scene(spec)
    with stage("write"):
        save_scene(scene, out_dir)
        write_ground_truth(out_dir / GT_DIR, [view.name for view in scene.views], truth.depth)
    state.echo(
        f"Wrote {len(scene.views)} views, {len(scene.sparse.points)} sparse points "
        f"to {out_dir} (ground truth in {out_dir / GT_DIR})"
    )
