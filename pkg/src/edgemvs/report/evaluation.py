"""Depth-raster scores of a run against ground truth.

Scores are per view and pooled over all views. A pixel is valid when its
depth is finite and positive. Completeness at t is the fraction of valid
ground-truth pixels whose estimate is valid and within relative error t;
accuracy at t is the fraction of valid estimates (where ground truth exists)
within relative error t.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
import pandas as pd

from edgemvs.core.model.errors import EvaluationError
from edgemvs.core.store.pfm import read_depth_map
from edgemvs.engine import RUN_SUMMARY, read_run_summary

THRESHOLDS = (0.01, 0.02)
POOLED = "all"
REPORT_TEXT = "eval.txt"
REPORT_TABLE = "eval.tsv"


def _label(threshold: float) -> str:
    return f"{threshold * 100:g}%"


@dataclass(frozen=True)
class DepthScore:
    """Scores of one view (or of all views pooled)."""

    name: str
    rmse: float
    completeness: dict[float, float]
    accuracy: dict[float, float]
    gt_pixels: int
    estimated_pixels: int

    def row(self) -> dict[str, object]:
        row: dict[str, object] = {"view": self.name, "rmse": self.rmse}
        for t in sorted(self.completeness):
            row[f"completeness@{_label(t)}"] = self.completeness[t]
        for t in sorted(self.accuracy):
            row[f"accuracy@{_label(t)}"] = self.accuracy[t]
        row["gt_pixels"] = self.gt_pixels
        row["estimated_pixels"] = self.estimated_pixels
        return row


def score_depth(
    name: str,
    estimate: NDArray[np.floating],
    truth: NDArray[np.floating],
    thresholds: tuple[float, ...] = THRESHOLDS,
) -> DepthScore:
    """Score one estimate against ground truth of the same shape.

    RMSE is taken over pixels valid in both rasters; with no such pixel it
    is infinite.

    Raises:
        EvaluationError: If the shapes differ
    """
    if estimate.shape != truth.shape:
        raise EvaluationError(
            f"view '{name}': estimate {estimate.shape} and ground truth {truth.shape} differ"
        )
    est = np.asarray(estimate, dtype=np.float64)
    gt = np.asarray(truth, dtype=np.float64)
    gt_valid = np.isfinite(gt) & (gt > 0)
    est_valid = np.isfinite(est) & (est > 0)
    both = gt_valid & est_valid

    diff = est[both] - gt[both]
    relative = np.abs(diff) / gt[both]
    rmse = float(np.sqrt(np.mean(diff**2))) if diff.size else float("inf")
    gt_count = int(gt_valid.sum())
    judged = int(both.sum())

    completeness = {}
    accuracy = {}
    for t in thresholds:
        within = int((relative <= t).sum())
        completeness[t] = within / gt_count if gt_count else 0.0
        accuracy[t] = within / judged if judged else 0.0
    return DepthScore(name, rmse, completeness, accuracy, gt_count, int(est_valid.sum()))


@dataclass
class EvalReport:
    """Per-view scores, their pooled row and the run's cost figures."""

    views: list[DepthScore]
    pooled: DepthScore
    runtime_seconds: float | None = None
    peak_raster_bytes: int | None = None
    extra: dict[str, str] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        """One row per view plus the pooled row last."""
        return pd.DataFrame([score.row() for score in [*self.views, self.pooled]])

    def to_text(self) -> str:
        """key=value lines: pooled scores first, then per view."""
        lines: dict[str, object] = {}
        for key, value in self.pooled.row().items():
            if key != "view":
                lines[key] = value
        if self.runtime_seconds is not None:
            lines["runtime_seconds"] = self.runtime_seconds
        if self.peak_raster_bytes is not None:
            lines["peak_raster_bytes"] = self.peak_raster_bytes
        for score in self.views:
            for key, value in score.row().items():
                if key != "view":
                    lines[f"view.{score.name}.{key}"] = value
        return "".join(f"{key}={_format(value)}\n" for key, value in lines.items())

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        """``eval.txt`` and ``eval.tsv`` under ``out_dir``."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        text_path = out_dir / REPORT_TEXT
        table_path = out_dir / REPORT_TABLE
        text_path.write_text(self.to_text())
        self.to_frame().to_csv(table_path, sep="\t", index=False, float_format="%.6g")
        return text_path, table_path


def _format(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _depth_files(root: Path) -> dict[str, Path]:
    return {path.stem: path for path in sorted((root / "depth").glob("*.pfm"))}


def evaluate(
    result_dir: str | Path,
    gt_dir: str | Path,
    thresholds: tuple[float, ...] = THRESHOLDS,
) -> EvalReport:
    """Compare ``result_dir/depth/*.pfm`` with ``gt_dir/depth/*.pfm``.

    Runtime and memory come from the run's ``run.txt`` when present.

    Raises:
        EvaluationError: If the two directories hold different view sets or none
    """
    result_dir, gt_dir = Path(result_dir), Path(gt_dir)
    results = _depth_files(result_dir)
    truths = _depth_files(gt_dir)
    if not results:
        raise EvaluationError(f"no depth maps under {result_dir / 'depth'}")
    if results.keys() != truths.keys():
        missing = sorted(truths.keys() - results.keys())
        unexpected = sorted(results.keys() - truths.keys())
        raise EvaluationError(
            f"view sets differ: missing from result {missing}, absent from ground truth "
            f"{unexpected}"
        )

    estimates, gts, scores = [], [], []
    for name in sorted(results):
        estimate = read_depth_map(results[name])
        truth = read_depth_map(truths[name])
        scores.append(score_depth(name, estimate, truth, thresholds))
        estimates.append(estimate.ravel())
        gts.append(truth.ravel())
    pooled = score_depth(POOLED, np.concatenate(estimates), np.concatenate(gts), thresholds)

    summary = read_run_summary(result_dir / RUN_SUMMARY)
    runtime = summary.pop("runtime_seconds", None)
    peak = summary.pop("peak_raster_bytes", None)
    return EvalReport(
        views=scores,
        pooled=pooled,
        runtime_seconds=None if runtime is None else float(runtime),
        peak_raster_bytes=None if peak is None else int(peak),
        extra=summary,
    )
