"""The ``edgemvs eval`` command."""

from __future__ import annotations

from pathlib import Path

import click

from edgemvs.cli.common import CliState, pass_state, stage
from edgemvs.report.evaluation import evaluate


@click.command()
@click.argument("result_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("gt_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Where eval.txt and eval.tsv go (default: RESULT_DIR)",
)
@pass_state
def eval_cmd(state: CliState, result_dir: Path, gt_dir: Path, out_dir: Path | None) -> None:
    """Score RESULT_DIR/depth against GT_DIR/depth.

    stdout carries the key=value report; the TSV table is written next to it.
    """
    with stage("eval"):
        report = evaluate(result_dir, gt_dir)
        text_path, table_path = report.write(out_dir or result_dir)
    click.echo(report.to_text(), nl=False)
    state.echo(f"Wrote {text_path} and {table_path}", err=True)
