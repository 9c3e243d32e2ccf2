"""Scene directory layout.

::

    cameras.txt          one line per view: name, K (9, row-major), R (9), T (3);
                         optional line ``depth_range dmin dmax``
    images/<view>.png    grayscale-convertible intensity image
    seg/<view>.png       16-bit instance labels, 0 = unlabeled
    mono/<view>.pfm      monocular depth, relative units
    sparse/points.txt    x y z nObs [view u v]...

Outputs of a run go to ``depth/<view>.pfm``, ``normal/<view>.pfm`` and
``fused.ply`` under the output directory.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from edgemvs.core.model.camera import CameraModel
from edgemvs.core.model.errors import SceneLoadError, SceneValidationError
from edgemvs.core.model.scene import (
    Observation,
    SceneBundle,
    SparsePoint,
    SparsePointSet,
    ViewBundle,
)
from edgemvs.core.store.images import read_gray, read_labels, write_gray, write_labels
from edgemvs.core.store.pfm import read_pfm, write_pfm

CAMERAS_FILE = "cameras.txt"
POINTS_FILE = Path("sparse") / "points.txt"
DEPTH_RANGE_KEY = "depth_range"
# Margin applied when the depth range is inferred from sparse points.
_RANGE_MARGIN = 0.5

_CAMERA_FIELDS = 21


def load_scene(root: str | Path) -> SceneBundle:
    """Load and validate a scene directory.

    Raises:
        SceneLoadError: A required file is missing or unreadable (message names it)
        SceneValidationError: Inputs are inconsistent (message names the view)
    """
    root = Path(root)
    cameras, depth_range = _read_cameras(root / CAMERAS_FILE)
    views = tuple(_load_view(root, name, camera) for name, camera in cameras)
    names = [view.name for view in views]
    sparse = _read_points(root / POINTS_FILE, names)

    if depth_range is None:
        depth_range = _infer_depth_range(views, sparse, root / CAMERAS_FILE)
    scene = SceneBundle(views=views, sparse=sparse, depth_range=depth_range)
    scene.validate()
    return scene


def _read_cameras(
    path: Path,
) -> tuple[list[tuple[str, tuple[np.ndarray, np.ndarray, np.ndarray]]], tuple[float, float] | None]:
    if not path.exists():
        raise SceneLoadError(f"missing {path.name} in {path.parent}")
    cameras: list[tuple[str, tuple[np.ndarray, np.ndarray, np.ndarray]]] = []
    depth_range: tuple[float, float] | None = None
    for line_no, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            if tokens[0] == DEPTH_RANGE_KEY:
                depth_range = (float(tokens[1]), float(tokens[2]))
                continue
            values = [float(token) for token in tokens[1:]]
        except (IndexError, ValueError):
            raise SceneLoadError(f"{path.name}:{line_no}: malformed line") from None
        if len(values) != _CAMERA_FIELDS:
            raise SceneLoadError(
                f"{path.name}:{line_no}: expected {_CAMERA_FIELDS} numbers after the view "
                f"name, got {len(values)}"
            )
        K = np.array(values[0:9]).reshape(3, 3)
        R = np.array(values[9:18]).reshape(3, 3)
        T = np.array(values[18:21])
        cameras.append((tokens[0], (K, R, T)))
    if not cameras:
        raise SceneLoadError(f"{path.name}: no cameras defined")
    return cameras, depth_range


def _load_view(
    root: Path, name: str, calibration: tuple[np.ndarray, np.ndarray, np.ndarray]
) -> ViewBundle:
    paths = {
        "image": root / "images" / f"{name}.png",
        "segmentation": root / "seg" / f"{name}.png",
        "mono": root / "mono" / f"{name}.pfm",
    }
    for path in paths.values():
        if not path.exists():
            raise SceneLoadError(f"missing {path.relative_to(root)} for view '{name}'")

    image = read_gray(paths["image"])
    K, R, T = calibration
    camera = CameraModel(K=K, R=R, T=T, width=image.shape[1], height=image.shape[0])
    return ViewBundle(
        name=name,
        image=image,
        segmentation=read_labels(paths["segmentation"]),
        mono_depth=read_pfm(paths["mono"]).astype(np.float64),
        camera=camera,
    )


def _read_points(path: Path, names: list[str]) -> SparsePointSet:
    if not path.exists():
        raise SceneLoadError(f"missing {POINTS_FILE}")
    index = {name: i for i, name in enumerate(names)}
    points: list[SparsePoint] = []
    for line_no, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            position = np.array([float(t) for t in tokens[:3]])
            count = int(tokens[3])
            fields = tokens[4:]
            if len(fields) != 3 * count or len(position) != 3:
                raise ValueError
            observations = tuple(
                Observation(
                    index[fields[3 * k]], float(fields[3 * k + 1]), float(fields[3 * k + 2])
                )
                for k in range(count)
            )
        except KeyError as e:
            raise SceneValidationError(f"{POINTS_FILE}:{line_no}: unknown view {e}") from None
        except (IndexError, ValueError):
            raise SceneLoadError(f"{POINTS_FILE}:{line_no}: malformed point line") from None
        points.append(SparsePoint(position=position, observations=observations))
    return SparsePointSet(tuple(points))


def _infer_depth_range(
    views: tuple[ViewBundle, ...], sparse: SparsePointSet, cameras_path: Path
) -> tuple[float, float]:
    depths = [
        sparse.in_view(i, view.camera).depths for i, view in enumerate(views)
    ]
    flat = np.concatenate(depths) if depths else np.zeros(0)
    flat = flat[flat > 0]
    if flat.size == 0:
        raise SceneLoadError(
            f"{cameras_path.name}: no '{DEPTH_RANGE_KEY}' line and no sparse points to infer it"
        )
    return float(flat.min() * (1 - _RANGE_MARGIN)), float(flat.max() * (1 + _RANGE_MARGIN))


def save_scene(scene: SceneBundle, root: str | Path) -> None:
    """Write a scene in the layout :func:`load_scene` reads."""
    root = Path(root)
    for sub in ("images", "seg", "mono", "sparse"):
        (root / sub).mkdir(parents=True, exist_ok=True)

    lines = [f"{DEPTH_RANGE_KEY} {scene.depth_range[0]!r} {scene.depth_range[1]!r}"]
    for view in scene.views:
        cam = view.camera
        numbers = [*cam.K.ravel(), *cam.R.ravel(), *cam.T.ravel()]
        lines.append(" ".join([view.name, *(repr(float(x)) for x in numbers)]))
        write_gray(view.image, root / "images" / f"{view.name}.png")
        write_labels(view.segmentation, root / "seg" / f"{view.name}.png")
        mono = np.asarray(view.mono_depth, dtype=np.float32)
        write_pfm(mono, root / "mono" / f"{view.name}.pfm")
    (root / CAMERAS_FILE).write_text("\n".join(lines) + "\n")

    point_lines = []
    for point in scene.sparse.points:
        obs = " ".join(
            f"{scene.views[o.view].name} {o.u!r} {o.v!r}" for o in point.observations
        )
        x, y, z = (repr(float(c)) for c in point.position)
        point_lines.append(f"{x} {y} {z} {len(point.observations)} {obs}".rstrip())
    (root / POINTS_FILE).write_text("\n".join(point_lines) + ("\n" if point_lines else ""))


def write_view_outputs(
    out_dir: str | Path, name: str, depth: np.ndarray, normal: np.ndarray
) -> None:
    """``depth/<view>.pfm`` and ``normal/<view>.pfm`` under ``out_dir``.

    Both rasters are narrowed to float32, the precision PFM stores.
    """
    out_dir = Path(out_dir)
    (out_dir / "depth").mkdir(parents=True, exist_ok=True)
    (out_dir / "normal").mkdir(parents=True, exist_ok=True)
    write_pfm(depth.astype(np.float32), out_dir / "depth" / f"{name}.pfm")
    write_pfm(normal.astype(np.float32), out_dir / "normal" / f"{name}.pfm")


def write_ground_truth(
    gt_dir: str | Path, names: list[str], depths: tuple[np.ndarray, ...]
) -> None:
    """Ground-truth depth as ``depth/<view>.pfm`` under ``gt_dir``, as run outputs are laid out.

    Synthetic truth is float64 and is narrowed to float32 on write.
    """
    depth_dir = Path(gt_dir) / "depth"
    depth_dir.mkdir(parents=True, exist_ok=True)
    for name, depth in zip(names, depths, strict=True):
        write_pfm(np.asarray(depth, dtype=np.float32), depth_dir / f"{name}.pfm")
