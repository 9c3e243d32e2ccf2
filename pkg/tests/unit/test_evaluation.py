"""Tests for scoring depth maps against ground truth."""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from edgemvs.core.model.errors import EvaluationError
from edgemvs.core.store.scene_dir import write_ground_truth
from edgemvs.engine import RUN_SUMMARY
from edgemvs.report.evaluation import POOLED, REPORT_TABLE, REPORT_TEXT, evaluate, score_depth

TRUTH = np.full((4, 5), 2.0)


class TestScoreDepth:
    """Tests for score_depth."""

    def test_exact_estimate(self) -> None:
        """Test perfect scores."""
        score = score_depth("v", TRUTH, TRUTH)
        assert score.rmse == 0.0
        assert score.completeness == {0.01: 1.0, 0.02: 1.0}
        assert score.accuracy == {0.01: 1.0, 0.02: 1.0}

    def test_relative_thresholds(self) -> None:
        """Test a 1.5% error: outside 1%, inside 2%."""
        score = score_depth("v", TRUTH * 1.015, TRUTH)
        assert score.completeness[0.01] == 0.0
        assert score.completeness[0.02] == 1.0
        assert score.rmse == pytest.approx(0.03)

    def test_missing_estimates(self) -> None:
        """Test that invalid estimates cost completeness but not accuracy."""
        estimate = TRUTH.copy()
        estimate[:2] = -1.0
        score = score_depth("v", estimate, TRUTH)
        assert score.completeness[0.01] == pytest.approx(0.5)
        assert score.accuracy[0.01] == 1.0
        assert score.estimated_pixels == 10

    def test_no_overlap(self) -> None:
        """Test an estimate with no valid pixel."""
        score = score_depth("v", np.full((4, 5), np.nan), TRUTH)
        assert score.rmse == float("inf")
        assert score.completeness[0.02] == 0.0

    def test_shape_mismatch(self) -> None:
        """Test rasters of different sizes."""
        with pytest.raises(EvaluationError, match="differ"):
            score_depth("v", np.ones((2, 2)), TRUTH)


class TestEvaluate:
    """Tests for evaluate and the report files."""

    @staticmethod
    def _write(root: Path, depths: dict[str, np.ndarray]) -> None:
        write_ground_truth(root, list(depths), tuple(depths.values()))

    def test_report_files(self, tmp_path: Path) -> None:
        """Test per-view rows, the pooled row and the run summary fields."""
        self._write(tmp_path / "gt", {"a": TRUTH, "b": TRUTH})
        self._write(tmp_path / "run", {"a": TRUTH, "b": TRUTH * 1.5})
        (tmp_path / "run" / RUN_SUMMARY).write_text(
            "version=0.1.0\nruntime_seconds=1.5\npeak_raster_bytes=1024\n"
        )
        report = evaluate(tmp_path / "run", tmp_path / "gt")
        assert [score.name for score in report.views] == ["a", "b"]
        assert report.pooled.completeness[0.02] == pytest.approx(0.5)
        assert report.runtime_seconds == 1.5
        assert report.peak_raster_bytes == 1024
        assert report.extra == {"version": "0.1.0"}

        text_path, table_path = report.write(tmp_path / "out")
        assert text_path.name == REPORT_TEXT
        lines = text_path.read_text().splitlines()
        assert "completeness@2%=0.5" in lines
        assert "view.a.rmse=0" in lines
        table = pd.read_csv(table_path, sep="\t")
        assert table_path.name == REPORT_TABLE
        assert table["view"].tolist() == ["a", "b", POOLED]

    def test_without_run_summary(self, tmp_path: Path) -> None:
        """Test that runtime fields are absent when run.txt is missing."""
        self._write(tmp_path / "gt", {"a": TRUTH})
        self._write(tmp_path / "run", {"a": TRUTH})
        report = evaluate(tmp_path / "run", tmp_path / "gt")
        assert report.runtime_seconds is None
        assert "runtime_seconds" not in report.to_text()

    def test_view_sets_differ(self, tmp_path: Path) -> None:
        """Test that mismatched view sets name what is missing."""
        self._write(tmp_path / "gt", {"a": TRUTH, "b": TRUTH})
        self._write(tmp_path / "run", {"a": TRUTH})
        with pytest.raises(EvaluationError, match=r"\['b'\]"):
            evaluate(tmp_path / "run", tmp_path / "gt")

    def test_empty_result(self, tmp_path: Path) -> None:
        """Test a result directory without depth maps."""
        self._write(tmp_path / "gt", {"a": TRUTH})
        with pytest.raises(EvaluationError, match="no depth maps"):
            evaluate(tmp_path / "run", tmp_path / "gt")
