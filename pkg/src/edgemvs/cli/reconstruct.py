"""The ``edgemvs reconstruct`` command."""

from __future__ import annotations

from pathlib import Path

import click

from edgemvs.cli.common import CliState, pass_state, stage
from edgemvs.core.store.scene_dir import load_scene
from edgemvs.engine import Reconstructor, write_reconstruction


@click.command()
@click.argument("scene_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("out_dir", type=click.Path(file_okay=False, path_type=Path))
@pass_state
def reconstruct_cmd(state: CliState, scene_dir: Path, out_dir: Path) -> None:
    """Reconstruct SCENE_DIR into depth/normal maps and a fused cloud under OUT_DIR."""
    config = state.config
    # full resolution here: the engine downsamples and rescales observations itself
    with stage("load"):
        scene = load_scene(scene_dir)
    state.echo(f"Loaded {len(scene.views)} views from {scene_dir}")

    with stage("reconstruct"):
        result = Reconstructor(config, progress=state.echo).reconstruct(scene)
    with stage("write"):
        ply_path = write_reconstruction(result, out_dir, config)

    state.echo(f"Wrote {len(result.names)} depth/normal maps and {ply_path}")
    state.echo(f"Runtime {result.runtime_seconds:.1f}s, final weights:")
    for name, solution in zip(result.names, result.solutions, strict=True):
        state.echo(f"  {name}: {solution.weights}")
