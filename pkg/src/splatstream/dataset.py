"""Multi-view dataset ingestion and pose file IO.

Layout: <root>/view_<k>/frame_<%06d>.png per camera, with optional
poses.yaml (rig) and target.yaml (novel viewpoints). All views must contain
identical frame counts and dimensions.
"""

from __future__ import annotations

import queue
import re
import threading
from dataclasses import dataclass
from pathlib import Path

import yaml

from .camera import Extrinsics, Intrinsics, Quaternion, intrinsics_from_normalized, quat_to_rotation
from .frames import FrameBuffer, MultiViewFrame

_VIEW_RE = re.compile(r"^view_(\d+)$")
_FRAME_RE = re.compile(r"^frame_(\d{6})\.(png|jpg|jpeg)$", re.IGNORECASE)
_LOSSLESS = {"png"}

POSES_FILENAME = "poses.yaml"
TARGET_FILENAME = "target.yaml"


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class PoseSpec:
    """One camera pose as stored on disk: quaternion + translation + normalized focal."""

    quaternion: Quaternion
    translation: tuple
    focal: float

    def camera(self, width: int, height: int):
        e = Extrinsics(quat_to_rotation(self.quaternion), self.translation)
        return e, intrinsics_from_normalized(self.focal, width, height)

    @classmethod
    def from_extrinsics(cls, e: Extrinsics, focal: float) -> "PoseSpec":
        return cls(Quaternion.from_rotation(e.rotation), tuple(e.translation), focal)


def load_pose_file(path) -> list:
    """Read one or more poses from a YAML document."""
    with open(path) as f:
        doc = yaml.safe_load(f)
    entries = doc if isinstance(doc, list) else [doc]
    specs = []
    for i, entry in enumerate(entries):
        try:
            q = Quaternion.from_array(entry["quaternion"]).normalized()
            t = tuple(float(v) for v in entry["translation"])
            focal = float(entry["focal"])
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"{path}: pose entry {i} is malformed: {exc}") from exc
        if len(t) != 3:
            raise DatasetError(f"{path}: pose entry {i} translation must have 3 components")
        specs.append(PoseSpec(q, t, focal))
    return specs


def save_pose_file(path, specs) -> None:
    doc = [
        {
            "quaternion": [float(v) for v in s.quaternion.as_array()],
            "translation": [float(v) for v in s.translation],
            "focal": float(s.focal),
        }
        for s in specs
    ]
    with open(path, "w") as f:
        yaml.safe_dump(doc if len(doc) != 1 else doc[0], f, sort_keys=False)


@dataclass
class DatasetSource:
    """Lazily decoded frame source over a validated on-disk layout."""

    root: Path
    view_names: list
    frame_paths: list  # per view, ordered lists of Paths
    width: int
    height: int
    lossy: bool
    poses: list | None  # PoseSpecs for the rig, if poses.yaml exists
    target_poses: list | None
    prefetch: int = 0  # bounded decode-ahead queue size; 0 disables

    @property
    def num_views(self) -> int:
        return len(self.view_names)

    @property
    def num_frames(self) -> int:
        return len(self.frame_paths[0])

    def _decode(self, t: int) -> MultiViewFrame:
        views = tuple(FrameBuffer.load(paths[t]) for paths in self.frame_paths)
        return MultiViewFrame(views, t)

    def __iter__(self):
        if self.prefetch <= 0:
            for t in range(self.num_frames):
                yield self._decode(t)
            return
        # Decode ahead of the scheduler on a bounded queue to respect
        # live-memory limits; the queue is the only cross-worker channel.
        q: queue.Queue = queue.Queue(maxsize=self.prefetch)
        sentinel = object()

        def worker():
            try:
                for t in range(self.num_frames):
                    q.put(self._decode(t))
            finally:
                q.put(sentinel)

        thread = threading.Thread(target=worker, daemon=True)
        thread.start()
        while True:
            item = q.get()
            if item is sentinel:
                break
            yield item
        thread.join()


def load_dataset(root, views=None, prefetch: int = 0) -> DatasetSource:
    """Validate a dataset layout and return a streaming source.

    `views` optionally selects a subset of camera indices (order preserved).
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    view_dirs = sorted(
        (d for d in root.iterdir() if d.is_dir() and _VIEW_RE.match(d.name)),
        key=lambda d: int(_VIEW_RE.match(d.name).group(1)),
    )
    if not view_dirs:
        raise DatasetError(f"no view_<k> directories under {root}")
    if views is not None:
        by_index = {int(_VIEW_RE.match(d.name).group(1)): d for d in view_dirs}
        missing = [k for k in views if k not in by_index]
        if missing:
            raise DatasetError(f"requested views {missing} not present under {root}")
        view_dirs = [by_index[k] for k in views]

    frame_paths, lossy = [], False
    for d in view_dirs:
        files = sorted(p for p in d.iterdir() if _FRAME_RE.match(p.name))
        if not files:
            raise DatasetError(f"view {d.name} contains no frame_<%06d> images")
        lossy = lossy or any(
            _FRAME_RE.match(p.name).group(2).lower() not in _LOSSLESS for p in files)
        frame_paths.append(files)
    counts = {len(p) for p in frame_paths}
    if len(counts) != 1:
        detail = ", ".join(f"{d.name}={len(p)}" for d, p in zip(view_dirs, frame_paths))
        raise DatasetError(f"frame counts differ across views: {detail}")

    first = FrameBuffer.load(frame_paths[0][0])
    for d, paths in zip(view_dirs, frame_paths):
        probe = FrameBuffer.load(paths[0])
        if (probe.height, probe.width) != (first.height, first.width):
            raise DatasetError(
                f"view {d.name} has dimensions {probe.width}x{probe.height}, "
                f"expected {first.width}x{first.height}")

    poses = None
    poses_path = root / POSES_FILENAME
    if poses_path.exists():
        all_poses = load_pose_file(poses_path)
        if views is not None:
            if max(views) >= len(all_poses):
                raise DatasetError(f"{poses_path}: fewer poses than requested view indices")
            poses = [all_poses[k] for k in views]
        else:
            poses = all_poses
    target_path = root / TARGET_FILENAME
    target_poses = load_pose_file(target_path) if target_path.exists() else None

    return DatasetSource(root, [d.name for d in view_dirs], frame_paths,
                         first.width, first.height, lossy, poses, target_poses,
                         prefetch=prefetch)
