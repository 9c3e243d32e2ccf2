"""Main CLI entry point for edgemvs."""

from __future__ import annotations

from pathlib import Path

import click

from edgemvs import __version__
from edgemvs.cli.common import CliState, build_override, configure_logging, load_run_config
from edgemvs.cli.evaluate import eval_cmd
from edgemvs.cli.reconstruct import reconstruct_cmd
from edgemvs.cli.stages import occlusion_cmd, patch_debug_cmd, restore_cmd
from edgemvs.cli.synth import synth_cmd
from edgemvs.core.model.config import AblationConfig


@click.group(invoke_without_command=True)
@click.version_option(version=__version__, prog_name="edgemvs")
@click.option(
    "--config",
    "-c",
    "config_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="YAML run configuration (default: built-in defaults)",
)
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Random seed")
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    default=None,
    help="Worker cap (default: EDGEMVS_JOBS or CPU count)",
)
@click.option(
    "--ablate",
    "ablations",
    multiple=True,
    metavar="NAME",
    help=f"Switch a stage off (repeatable): {', '.join(AblationConfig.names())}",
)
@click.option(
    "--set",
    "-s",
    "assignments",
    multiple=True,
    metavar="KEY=VALUE",
    help="Override an engine parameter (repeatable), e.g. window_size=9 or X=8",
)
@click.option("--verbose", "-v", is_flag=True, help="Debug logging on stderr")
@click.option("--quiet", "-q", is_flag=True, help="Suppress progress output")
@click.option("--print-config", is_flag=True, help="Print the resolved configuration and exit")
@click.pass_context
def cli(
    ctx: click.Context,
    config_path: Path | None,
    seed: int | None,
    threads: int | None,
    ablations: tuple[str, ...],
    assignments: tuple[str, ...],
    verbose: bool,
    quiet: bool,
    print_config: bool,
) -> None:
    """edgemvs: edge-aware patch-deformation multi-view stereo."""
    configure_logging(verbose)
    override = build_override(seed, threads, ablations, assignments)
    config = load_run_config(config_path, override)
    ctx.obj = CliState(config=config, quiet=quiet, seed=seed)

    if print_config:
        click.echo(config.to_yaml_text(), nl=False)
        ctx.exit(0)
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


cli.add_command(reconstruct_cmd, name="reconstruct")
cli.add_command(restore_cmd, name="restore")
cli.add_command(occlusion_cmd, name="occlusion")
cli.add_command(patch_debug_cmd, name="patch-debug")
cli.add_command(synth_cmd, name="synth")
cli.add_command(eval_cmd, name="eval")


def main(argv: list[str] | None = None) -> None:
    """Main entry point for the CLI."""
    cli(argv)
