"""Deterministic synthetic scenes: desk-scale ground truth for pipeline tests
and benchmarks, with a semicircular camera ring facing the scene center."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sh
from .camera import Extrinsics, Intrinsics, Quaternion, intrinsics_from_normalized, look_at
from .frames import FrameBuffer, MultiViewFrame
from .gaussians import GaussianPrimitive, GaussianScene
from .rasterizer import rasterize


@dataclass(frozen=True)
class CameraRingSpec:
    """Cameras on a semicircle facing the scene center."""

    num_cameras: int = 5
    radius: float = 4.0
    height: float = 0.5
    focal: float = 1.0  # normalized
    span_degrees: float = 180.0

    def __post_init__(self):
        if self.num_cameras < 1 or self.radius <= 0:
            raise ValueError("invalid camera ring")


@dataclass(frozen=True)
class SyntheticSceneSpec:
    """Randomized Gaussian cloud with per-primitive linear + sinusoidal motion."""

    seed: int = 0
    num_gaussians: int = 32
    duration: int = 10
    velocity: float = 0.0  # max linear speed, scene units per frame
    wobble_amplitude: float = 0.0  # sinusoidal term, scene units
    wobble_period: float = 20.0  # frames
    extent: float = 1.0
    sh_degree: int = 1
    opacity_range: tuple = (0.6, 1.0)
    background: tuple = (0.0, 0.0, 0.0)
    ring: CameraRingSpec = field(default_factory=CameraRingSpec)

    def __post_init__(self):
        if self.num_gaussians < 1 or self.duration < 1:
            raise ValueError("invalid synthetic scene spec")


class SyntheticSceneGenerator:
    """Per-frame ground-truth scene sequence, deterministic for a fixed seed."""

    def __init__(self, spec: SyntheticSceneSpec):
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        n = spec.num_gaussians
        self.means0 = rng.uniform(-spec.extent, spec.extent, size=(n, 3))
        self.scales = rng.uniform(0.08, 0.25, size=(n, 3)) * spec.extent
        quats = rng.normal(size=(n, 4))
        self.rotations = [Quaternion.from_array(q).normalized() for q in quats]
        self.opacities = rng.uniform(*spec.opacity_range, size=n)
        n_coeff = sh.num_coeffs(spec.sh_degree)
        colors = rng.uniform(0.1, 0.9, size=(n, 3))
        self.sh_coeffs = np.zeros((n, n_coeff, 3))
        self.sh_coeffs[:, 0, :] = (colors - 0.5) / sh.C0
        if n_coeff > 1:
            self.sh_coeffs[:, 1:, :] = rng.uniform(-0.1, 0.1, size=(n, n_coeff - 1, 3))
        direction = rng.normal(size=(n, 3))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        self.velocities = direction * rng.uniform(0, spec.velocity, size=(n, 1))
        self.wobble_dir = rng.normal(size=(n, 3))
        self.wobble_dir /= np.linalg.norm(self.wobble_dir, axis=1, keepdims=True)
        self.wobble_phase = rng.uniform(0, 2 * math.pi, size=(n, 1))

    def scene_at(self, t: int) -> GaussianScene:
        spec = self.spec
        omega = 2 * math.pi / spec.wobble_period
        offset = (self.velocities * t
                  + spec.wobble_amplitude * self.wobble_dir
                  * np.sin(omega * t + self.wobble_phase))
        means = self.means0 + offset
        prims = tuple(
            GaussianPrimitive(means[i], self.rotations[i], self.scales[i],
                              float(self.opacities[i]), self.sh_coeffs[i])
            for i in range(spec.num_gaussians)
        )
        return GaussianScene(prims, np.asarray(spec.background))

    def cameras(self, width: int, height: int):
        """Ring poses as (Extrinsics, Intrinsics) pairs, ordered along the arc."""
        ring = self.spec.ring
        pairs = []
        for i in range(ring.num_cameras):
            if ring.num_cameras == 1:
                theta = 0.0
            else:
                frac = i / (ring.num_cameras - 1)
                theta = math.radians(ring.span_degrees) * (frac - 0.5)
            eye = np.array([ring.radius * math.sin(theta), ring.height,
                            ring.radius * math.cos(theta)])
            pairs.append((look_at(eye, (0.0, 0.0, 0.0)),
                          intrinsics_from_normalized(ring.focal, width, height)))
        return pairs

    def render(self, t: int, camera, width: int, height: int) -> FrameBuffer:
        e, k = camera
        return rasterize(self.scene_at(t), e, k, width, height)

    def frame_source(self, input_cams, width: int, height: int):
        """Iterator of MultiViewFrames: ground-truth renders from the input rig."""
        for t in range(self.spec.duration):
            scene = self.scene_at(t)
            views = tuple(rasterize(scene, e, k, width, height) for e, k in input_cams)
            yield MultiViewFrame(views, t)

    def ground_truth(self, camera, width: int, height: int):
        """Per-frame reference renders from one camera (the oracle closure:
        produced with the same rasterizer)."""
        return [self.render(t, camera, width, height) for t in range(self.spec.duration)]
