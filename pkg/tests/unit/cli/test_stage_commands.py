"""Tests for the synth, restore, occlusion and patch-debug commands."""

from pathlib import Path

from click.testing import CliRunner

from edgemvs.cli.main import cli
from edgemvs.core.store.images import read_rgb
from edgemvs.core.store.pfm import read_pfm
from edgemvs.core.store.scene_dir import load_scene


class TestSynthCommand:
    """Test the synth command."""

    def test_writes_a_loadable_scene(self, tmp_path: Path) -> None:
        """Test that the written scene and ground truth load back."""
        out = tmp_path / "synth"
        result = CliRunner().invoke(
            cli, ["--seed", "3", "synth", str(out), "--width", "32", "--height", "24"]
        )
        assert result.exit_code == 0
        assert "Wrote 3 views" in result.output
        scene = load_scene(out)
        assert scene.views[0].shape == (24, 32)
        assert read_pfm(out / "gt" / "depth" / "view002.pfm").shape == (24, 32)

    def test_spec_file_and_mono_mode(self, tmp_path: Path) -> None:
        """Test a YAML description with the per-instance mono distortion."""
        spec_path = tmp_path / "scene.yaml"
        spec_path.write_text(
            "width: 24\nheight: 16\nsurfaces:\n"
            "  - {x0: -10, x1: 10, y0: -10, y1: 10, depth: 3.0}\n"
        )
        out = tmp_path / "synth"
        result = CliRunner().invoke(
            cli,
            ["synth", str(out), "--spec", str(spec_path), "--views", "2"]
            + ["--mono-mode", "per_instance"],
        )
        assert result.exit_code == 0
        assert len(load_scene(out).views) == 2

    def test_ambiguous_surfaces(self, tmp_path: Path) -> None:
        """Test that overlapping surfaces at one depth are a synth error."""
        spec_path = tmp_path / "scene.yaml"
        spec_path.write_text(
            "surfaces:\n"
            "  - {x0: -10, x1: 10, y0: -10, y1: 10, depth: 3.0}\n"
            "  - {x0: -1, x1: 1, y0: -1, y1: 1, depth: 3.0}\n"
        )
        result = CliRunner().invoke(cli, ["synth", str(tmp_path / "out"), "--spec", str(spec_path)])
        assert result.exit_code == 1
        assert "Error [synth]" in result.output
        assert "overlap" in result.output


class TestStageCommands:
    """Test the single-stage debugging commands."""

    def test_restore(self, tmp_path: Path, scene_dir: Path) -> None:
        """Test restored depth and provenance for every view."""
        out = tmp_path / "restore"
        result = CliRunner().invoke(
            cli, ["-s", "ransac_iterations=100", "restore", str(scene_dir), str(out)]
        )
        assert result.exit_code == 0
        for name in ("view000", "view001", "view002"):
            assert name in result.output
            assert read_pfm(out / "restored" / f"{name}.pfm").shape == (40, 48)
            assert read_rgb(out / "provenance" / f"{name}.png").shape == (40, 48, 3)

    def test_restore_one_view(self, tmp_path: Path, scene_dir: Path) -> None:
        """Test --view, and an unknown view name."""
        out = tmp_path / "restore"
        runner = CliRunner()
        result = runner.invoke(cli, ["restore", str(scene_dir), str(out), "--view", "view001"])
        assert result.exit_code == 0
        assert sorted(path.name for path in (out / "restored").iterdir()) == ["view001.pfm"]

        result = runner.invoke(cli, ["restore", str(scene_dir), str(out), "--view", "nope"])
        assert result.exit_code == 1
        assert "unknown view 'nope'" in result.output

    def test_occlusion(self, tmp_path: Path, scene_dir: Path) -> None:
        """Test the occlusion overlay at the working resolution."""
        out = tmp_path / "occlusion"
        result = CliRunner().invoke(
            cli, ["-s", "downsample=2", "occlusion", str(scene_dir), str(out)]
        )
        assert result.exit_code == 0
        assert "discontinuous boundary pixels" in result.output
        assert read_rgb(out / "occlusion" / "view000.png").shape == (20, 24, 3)

    def test_patch_debug(self, tmp_path: Path, scene_dir: Path) -> None:
        """Test the overlay and text listing of one patch."""
        out = tmp_path / "patch"
        result = CliRunner().invoke(
            cli,
            ["patch-debug", str(scene_dir), str(out), "--view", "view000", "--pixel", "20", "24"],
        )
        assert result.exit_code == 0
        assert "16 trajectories" in result.output
        listing = (out / "patch" / "view000_20_24.txt").read_text().splitlines()
        assert listing[0] == "center 20 24"
        assert sum(line.startswith("trajectory") for line in listing) == 16
        assert (out / "patch" / "view000_20_24.png").exists()

    def test_patch_debug_outside(self, tmp_path: Path, scene_dir: Path) -> None:
        """Test a center outside the raster."""
        result = CliRunner().invoke(
            cli,
            ["patch-debug", str(scene_dir), str(tmp_path), "--view", "view000"]
            + ["--pixel", "99", "0"],
        )
        assert result.exit_code == 1
        assert "Error [patch-debug]" in result.output
