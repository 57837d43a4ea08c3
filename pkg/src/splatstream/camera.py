"""Camera parametrization: quaternions, rigid extrinsics, pinhole intrinsics,
the 7-component pose embedding, and relative-pose accuracy metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Points at or behind this camera-space depth are culled, not rendered.
NEAR_PLANE = 1e-4


@dataclass(frozen=True)
class Quaternion:
    """Unit-norm rotation quaternion in (w, x, y, z) order, canonical sign w >= 0."""

    w: float
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def normalized(self) -> "Quaternion":
        n = self.norm()
        if not math.isfinite(n) or n == 0.0:
            raise ValueError("cannot normalize a zero or non-finite quaternion")
        w, x, y, z = self.w / n, self.x / n, self.y / n, self.z / n
        if w < 0.0:
            w, x, y, z = -w, -x, -y, -z
        return Quaternion(w, x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z], dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        a = np.asarray(a, dtype=np.float64)
        if a.shape != (4,):
            raise ValueError(f"expected 4 components, got shape {a.shape}")
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    @classmethod
    def from_rotation(cls, m) -> "Quaternion":
        """Convert a proper rotation matrix to a canonical unit quaternion.

        Uses the largest-diagonal branch (Shepperd's method) for stability.
        """
        m = np.asarray(m, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"expected 3x3 matrix, got shape {m.shape}")
        if np.linalg.det(m) <= 0:
            raise ValueError("rotation matrix has non-positive determinant")
        t = np.trace(m)
        if t > 0:
            s = math.sqrt(t + 1.0) * 2.0
            w = 0.25 * s
            x = (m[2, 1] - m[1, 2]) / s
            y = (m[0, 2] - m[2, 0]) / s
            z = (m[1, 0] - m[0, 1]) / s
        elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
            s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
            w = (m[2, 1] - m[1, 2]) / s
            x = 0.25 * s
            y = (m[0, 1] + m[1, 0]) / s
            z = (m[0, 2] + m[2, 0]) / s
        elif m[1, 1] > m[2, 2]:
            s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
            w = (m[0, 2] - m[2, 0]) / s
            x = (m[0, 1] + m[1, 0]) / s
            y = 0.25 * s
            z = (m[1, 2] + m[2, 1]) / s
        else:
            s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
            w = (m[1, 0] - m[0, 1]) / s
            x = (m[0, 2] + m[2, 0]) / s
            y = (m[1, 2] + m[2, 1]) / s
            z = 0.25 * s
        return cls(w, x, y, z).normalized()


def quat_to_rotation(q: Quaternion) -> np.ndarray:
    """Rotation matrix of a quaternion. Input is normalized internally."""
    q = q.normalized()
    w, x, y, z = q.w, q.x, q.y, q.z
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ],
        dtype=np.float64,
    )


@dataclass(frozen=True)
class Extrinsics:
    """World-to-camera rigid transform: x_cam = rotation @ x_world + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {r.shape}")
        if np.linalg.norm(r.T @ r - np.eye(3)) > 1e-6 or abs(np.linalg.det(r) - 1) > 1e-6:
            raise ValueError("rotation is not orthonormal with determinant +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @property
    def camera_center(self) -> np.ndarray:
        """Camera position in world coordinates."""
        return -self.rotation.T @ self.translation

    def transform(self, points: np.ndarray) -> np.ndarray:
        """Map world points (..., 3) into the camera frame."""
        return points @ self.rotation.T + self.translation

    def compose_world(self, rotation: np.ndarray, translation: np.ndarray) -> "Extrinsics":
        """Apply a rigid transform to the world frame: new pose sees the moved world."""
        return Extrinsics(self.rotation @ rotation, self.rotation @ translation + self.translation)


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole parameters in pixels."""

    focal_x: float
    focal_y: float
    c_x: float
    c_y: float

    def __post_init__(self):
        if self.focal_x <= 0 or self.focal_y <= 0:
            raise ValueError("focal lengths must be positive")


def intrinsics_from_normalized(focal: float, width: int, height: int) -> Intrinsics:
    """Intrinsics from a normalized focal with centered principal point."""
    if focal <= 0:
        raise ValueError("normalized focal must be positive")
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be >= 1")
    return Intrinsics(focal * width, focal * height, width / 2.0, height / 2.0)


@dataclass(frozen=True)
class PoseEmbedding:
    """7-component camera embedding: unit quaternion + normalized translation."""

    quaternion: Quaternion
    translation: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "quaternion", self.quaternion.normalized())

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.quaternion.as_array(), self.translation])


def pack_pose(e: Extrinsics, scale: float = 1.0) -> PoseEmbedding:
    """Encode extrinsics as a 7-vector; translation divided by the scene scale."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    return PoseEmbedding(Quaternion.from_rotation(e.rotation), e.translation / scale)


def unpack_pose(p: PoseEmbedding, scale: float = 1.0) -> Extrinsics:
    """Inverse of pack_pose."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    return Extrinsics(quat_to_rotation(p.quaternion), p.translation * scale)


def project_point(point, e: Extrinsics, k: Intrinsics):
    """Pinhole projection of a world point.

    Returns (u, v, depth) in pixels / scene units, or None when the point lies
    at or behind the near plane (culled, not an error).
    """
    p_cam = e.rotation @ np.asarray(point, dtype=np.float64).reshape(3) + e.translation
    depth = p_cam[2]
    if depth <= NEAR_PLANE:
        return None
    u = k.c_x + k.focal_x * p_cam[0] / depth
    v = k.c_y + k.focal_y * p_cam[1] / depth
    return (u, v, depth)


def look_at(eye, target, up=(0.0, 1.0, 0.0)) -> Extrinsics:
    """World-to-camera extrinsics for a camera at `eye` looking at `target`.

    Camera convention: +x right, +y down, +z forward (into the scene).
    """
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    fwd = target - eye
    n = np.linalg.norm(fwd)
    if n < 1e-12:
        raise ValueError("eye and target coincide")
    fwd = fwd / n
    up = np.asarray(up, dtype=np.float64)
    right = np.cross(fwd, up)
    rn = np.linalg.norm(right)
    if rn < 1e-12:
        # view direction parallel to up: pick an arbitrary perpendicular
        up = np.array([1.0, 0.0, 0.0]) if abs(fwd[0]) < 0.9 else np.array([0.0, 0.0, 1.0])
        right = np.cross(fwd, up)
        rn = np.linalg.norm(right)
    right = right / rn
    down = np.cross(fwd, right)
    r = np.stack([right, down, fwd], axis=0)
    return Extrinsics(r, -r @ eye)


# ---------------------------------------------------------------------------
# Pose accuracy metrics over relative pose pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoseErrorReport:
    """Relative-pose accuracy summary; percentages in [0, 100], errors in degrees."""

    rra_at_tau: float
    rta_at_tau: float
    auc_at_30: float
    rotation_errors: np.ndarray = field(repr=False)
    translation_errors: np.ndarray = field(repr=False)


def _rotation_angle_deg(r: np.ndarray) -> float:
    c = (np.trace(r) - 1.0) / 2.0
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))


def _direction_angle_deg(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-12 and nb < 1e-12:
        return 0.0
    if na < 1e-12 or nb < 1e-12:
        return 180.0
    c = float(np.dot(a, b) / (na * nb))
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))


def _relative(e_i: Extrinsics, e_j: Extrinsics):
    """Camera-i-to-camera-j relative rotation and translation."""
    r = e_j.rotation @ e_i.rotation.T
    t = e_j.translation - r @ e_i.translation
    return r, t


def align_to_first(pred: list, gt: list) -> list:
    """Re-express predicted poses so the first one coincides with the first
    ground-truth pose (pose sets are defined only up to a rigid world transform)."""
    # S maps the gt world frame to the pred world frame: pred0 o S = gt0.
    r_s = pred[0].rotation.T @ gt[0].rotation
    t_s = pred[0].rotation.T @ (gt[0].translation - pred[0].translation)
    return [e.compose_world(r_s, t_s) for e in pred]


def pose_error_metrics(pred: list, gt: list, tau: float = 5.0,
                       pairs: str = "all") -> PoseErrorReport:
    """RRA/RTA at threshold tau and AUC@30 over relative pose pairs.

    `pairs` selects the pair set: "all" unordered pairs (default) or
    "consecutive" (i, i+1) pairs. AUC@30 averages the rotation and translation
    accuracy curves sampled at integer degree thresholds 1..30.
    """
    if len(pred) != len(gt):
        raise ValueError("pose lists must have equal length")
    if len(pred) < 2:
        raise ValueError("need at least 2 poses for relative metrics")
    n = len(pred)
    if pairs == "all":
        pair_set = [(i, j) for i in range(n) for j in range(i + 1, n)]
    elif pairs == "consecutive":
        pair_set = [(i, i + 1) for i in range(n - 1)]
    else:
        raise ValueError(f"unknown pair set {pairs!r}")
    pred = align_to_first(pred, gt)
    rot_errs, tr_errs = [], []
    for i, j in pair_set:
        rp, tp = _relative(pred[i], pred[j])
        rg, tg = _relative(gt[i], gt[j])
        rot_errs.append(_rotation_angle_deg(rp.T @ rg))
        tr_errs.append(_direction_angle_deg(tp, tg))
    rot_errs = np.array(rot_errs)
    tr_errs = np.array(tr_errs)
    n_pairs = len(pair_set)
    # Integer counts keep threshold fractions exact (e.g. 6/10 pairs -> 60.0).
    rra = 100.0 * int(np.count_nonzero(rot_errs < tau)) / n_pairs
    rta = 100.0 * int(np.count_nonzero(tr_errs < tau)) / n_pairs
    thresholds = np.arange(1, 31, dtype=np.float64)
    acc_rot = (rot_errs[None, :] < thresholds[:, None]).mean(axis=1)
    acc_tr = (tr_errs[None, :] < thresholds[:, None]).mean(axis=1)
    auc = 100.0 * float(((acc_rot + acc_tr) / 2.0).mean())
    return PoseErrorReport(rra, rta, auc, rot_errs, tr_errs)
