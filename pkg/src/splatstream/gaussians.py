"""3D Gaussian scene representation, pointmap initialization, and snapshot IO."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import sh
from .camera import Quaternion, quat_to_rotation
from .frames import FrameBuffer

SCENE_MAGIC = b"GSC1"


@dataclass(frozen=True)
class GaussianPrimitive:
    """One anisotropic 3D Gaussian splat."""

    mean: np.ndarray  # (3,) scene units
    rotation: Quaternion
    scale: np.ndarray  # (3,) positive scene units
    opacity: float
    sh_coeffs: np.ndarray  # ((deg+1)^2, 3)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(3)
        scale = np.asarray(self.scale, dtype=np.float64).reshape(3)
        coeffs = np.asarray(self.sh_coeffs, dtype=np.float64)
        if np.any(scale <= 0):
            raise ValueError("scale components must be positive")
        if not 0.0 <= self.opacity <= 1.0:
            raise ValueError("opacity must lie in [0, 1]")
        sh.degree_from_count(coeffs.shape[0])  # validates the count
        if coeffs.ndim != 2 or coeffs.shape[1] != 3:
            raise ValueError(f"sh_coeffs must have shape (n, 3), got {coeffs.shape}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "sh_coeffs", coeffs)
        object.__setattr__(self, "rotation", self.rotation.normalized())

    @property
    def sh_degree(self) -> int:
        return sh.degree_from_count(self.sh_coeffs.shape[0])


@dataclass(frozen=True)
class GaussianScene:
    """A set of Gaussian primitives over a constant background color."""

    primitives: tuple
    background: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        prims = tuple(self.primitives)
        bg = np.asarray(self.background, dtype=np.float64).reshape(3)
        if np.any(bg < 0) or np.any(bg > 1):
            raise ValueError("background must lie in [0, 1]^3")
        object.__setattr__(self, "primitives", prims)
        object.__setattr__(self, "background", bg)

    def __len__(self) -> int:
        return len(self.primitives)


def covariance_3d(rotation: Quaternion, scale) -> np.ndarray:
    """World-space covariance R S S^T R^T of an anisotropic Gaussian."""
    scale = np.asarray(scale, dtype=np.float64).reshape(3)
    if np.any(scale <= 0):
        raise ValueError("scale components must be positive")
    r = quat_to_rotation(rotation)
    rs = r * scale[None, :]
    return rs @ rs.T


@dataclass(frozen=True)
class PointMap:
    """Dense per-pixel 3D points with a validity mask."""

    points: np.ndarray  # (H, W, 3)
    valid: np.ndarray  # (H, W) bool

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if pts.ndim != 3 or pts.shape[2] != 3:
            raise ValueError(f"points must have shape (H, W, 3), got {pts.shape}")
        if valid.shape != pts.shape[:2]:
            raise ValueError("validity mask must match point grid dimensions")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "valid", valid)


@dataclass(frozen=True)
class PointmapInitOptions:
    """Deterministic appearance rule for pointmap-initialized splats.

    Isotropic scale grows linearly with distance from the capture camera so
    splats roughly tile the source image; pixel_angle is the solid-angle
    factor (about 1 / focal_x for square pixels).
    """

    pixel_angle: float = 1e-2
    opacity: float = 0.8
    camera_center: tuple = (0.0, 0.0, 0.0)
    background: tuple = (0.0, 0.0, 0.0)


def gaussians_from_pointmap(pm: PointMap, colors: FrameBuffer,
                            opts: PointmapInitOptions = PointmapInitOptions()) -> GaussianScene:
    """One degree-0 primitive per valid pointmap entry, colored by its pixel."""
    h, w = pm.points.shape[:2]
    if (colors.height, colors.width) != (h, w):
        raise ValueError(
            f"pointmap {w}x{h} and color image {colors.width}x{colors.height} dimensions differ")
    center = np.asarray(opts.camera_center, dtype=np.float64)
    identity = Quaternion(1.0, 0.0, 0.0, 0.0)
    prims = []
    for r in range(h):
        for c in range(w):
            if not pm.valid[r, c]:
                continue
            p = pm.points[r, c]
            depth = float(np.linalg.norm(p - center))
            s = max(depth * opts.pixel_angle, 1e-9)
            prims.append(GaussianPrimitive(
                mean=p,
                rotation=identity,
                scale=np.array([s, s, s]),
                opacity=opts.opacity,
                sh_coeffs=sh.dc_from_color(colors.data[r, c]),
            ))
    return GaussianScene(tuple(prims), np.asarray(opts.background, dtype=np.float64))


# ---------------------------------------------------------------------------
# Scene snapshot file: little-endian, magic "GSC1", u32 count, u8 sh_degree,
# then per primitive: 3xf32 mean, 4xf32 quaternion, 3xf32 scale, f32 opacity,
# (3*(deg+1)^2)xf32 SH coefficients.
# ---------------------------------------------------------------------------


def save_scene(scene: GaussianScene, path) -> None:
    if len(scene) == 0:
        degree = 0
    else:
        degree = scene.primitives[0].sh_degree
        if any(p.sh_degree != degree for p in scene.primitives):
            raise ValueError("all primitives must share one SH degree for snapshot export")
    with open(path, "wb") as f:
        f.write(SCENE_MAGIC)
        f.write(struct.pack("<IB", len(scene), degree))
        for p in scene.primitives:
            row = np.concatenate([
                p.mean,
                p.rotation.as_array(),
                p.scale,
                [p.opacity],
                p.sh_coeffs.reshape(-1),
            ]).astype("<f4")
            f.write(row.tobytes())


def load_scene(path, background=(0.0, 0.0, 0.0)) -> GaussianScene:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != SCENE_MAGIC:
            raise ValueError(f"bad scene magic {magic!r}")
        count, degree = struct.unpack("<IB", f.read(5))
        n_sh = 3 * sh.num_coeffs(degree)
        stride = 3 + 4 + 3 + 1 + n_sh
        raw = np.frombuffer(f.read(count * stride * 4), dtype="<f4")
    if raw.size != count * stride:
        raise ValueError("truncated scene snapshot")
    raw = raw.reshape(count, stride).astype(np.float64)
    prims = []
    for row in raw:
        prims.append(GaussianPrimitive(
            mean=row[0:3],
            rotation=Quaternion.from_array(row[3:7]),
            scale=row[7:10],
            opacity=float(row[10]),
            sh_coeffs=row[11:].reshape(sh.num_coeffs(degree), 3),
        ))
    return GaussianScene(tuple(prims), np.asarray(background, dtype=np.float64))
