"""State shared by every subcommand: the resolved run config and the error boundary."""

from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass
import logging
from pathlib import Path
import sys
from typing import NoReturn

import click
from pydantic import ValidationError

from edgemvs.core.model.config import RunConfig
from edgemvs.core.model.config_override import ConfigOverride
from edgemvs.core.model.errors import EdgeMVSError, SceneValidationError
from edgemvs.core.model.scene import SceneBundle, ViewBundle
from edgemvs.core.store.scene_dir import load_scene
from edgemvs.engine import downsample_scene


@dataclass
class CliState:
    """Attached to the click context by the group callback."""

    config: RunConfig
    quiet: bool = False
    seed: int | None = None

    def echo(self, message: str, *, err: bool = False) -> None:
        """Progress line, suppressed by ``--quiet``."""
        if not self.quiet:
            click.echo(message, err=err)


def fail(stage: str, error: BaseException) -> NoReturn:
    click.echo(f"Error [{stage}]: {error}", err=True)
    sys.exit(1)


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Report any edgemvs or I/O failure inside the block as ``Error [name]``."""
    try:
        yield
    except (EdgeMVSError, OSError) as error:
        fail(name, error)


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def build_override(
    seed: int | None,
    threads: int | None,
    ablations: tuple[str, ...],
    assignments: tuple[str, ...],
) -> ConfigOverride:
    """Collect group flags into a ConfigOverride; bad values exit with code 1."""
    override = ConfigOverride(seed=seed, threads=threads)
    with stage("config"):
        for name in ablations:
            override.add_ablation(name)
    for assignment in assignments:
        try:
            override.parse_assignment(assignment)
        except ValueError as error:
            fail("config", error)
    return override


def load_run_config(config_path: Path | None, override: ConfigOverride) -> RunConfig:
    """File (or defaults) with the command-line overrides applied."""
    try:
        if config_path is None:
            base = RunConfig.generate_default()
        else:
            base = RunConfig.from_yaml(config_path)
        return base.apply_overrides(override)
    except (ValidationError, ValueError, FileNotFoundError) as error:
        fail("config", error)


def load_working_scene(scene_dir: Path, config: RunConfig) -> SceneBundle:
    """Load a scene and bring it to the working resolution."""
    with stage("load"):
        scene = load_scene(scene_dir)
    return downsample_scene(scene, config.engine.downsample)


def select_views(scene: SceneBundle, name: str | None) -> list[tuple[int, ViewBundle]]:
    """All views, or the one called ``name``."""
    views = list(enumerate(scene.views))
    if name is None:
        return views
    chosen = [(index, view) for index, view in views if view.name == name]
    if not chosen:
        known = ", ".join(view.name for view in scene.views)
        fail("load", SceneValidationError(f"unknown view '{name}' (scene has {known})"))
    return chosen


pass_state = click.make_pass_decorator(CliState)
