"""Pluggable pipeline stage contracts and reference implementations.

Three stage kinds compose the per-snippet data flow: a spatial stage turns
one multi-view input frame into a Gaussian scene plus novel-view renders,
an interpolator synthesizes the middle frame between two keyframe renders,
and a super-resolution stage doubles output resolution. Implementations are
selected by name through the registry, so oracle / baseline / external
learned models swap without pipeline changes.
"""

from __future__ import annotations

import socket
from dataclasses import dataclass

import cv2
import numpy as np

from .camera import Extrinsics, Intrinsics
from .frames import (FrameBuffer, MultiViewFrame, NovelFrame,
                     PROVENANCE_INTERPOLATED, PROVENANCE_KEYFRAME, PROVENANCE_UPSCALED)
from .gaussians import GaussianScene, PointMap, PointmapInitOptions, gaussians_from_pointmap
from .rasterizer import rasterize
from . import wire


@dataclass(frozen=True)
class SpatialStageOutput:
    scene: GaussianScene
    rendered: NovelFrame


def render_targets(scene: GaussianScene, targets, width: int, height: int, index: int,
                   provenance: str = PROVENANCE_KEYFRAME) -> NovelFrame:
    views = [rasterize(scene, e, k, width, height) for e, k in targets]
    return NovelFrame(tuple(views), index, provenance)


class SpatialStage:
    """Contract: (multi-view frame, rig poses, target poses) -> scene + renders.

    Subclasses implement reconstruct(); rendering of the requested targets is
    shared so the output invariant (rendered == rasterize(scene, target_i))
    holds for every in-process implementation.
    """

    def reconstruct(self, frame: MultiViewFrame, rig) -> GaussianScene:
        raise NotImplementedError

    def __call__(self, frame: MultiViewFrame, rig, targets) -> SpatialStageOutput:
        if len(rig) != frame.n:
            raise ValueError(f"rig has {len(rig)} poses for {frame.n} views")
        if not targets:
            raise ValueError("at least one target pose is required")
        scene = self.reconstruct(frame, rig)
        h, w = frame.views[0].height, frame.views[0].width
        return SpatialStageOutput(scene, render_targets(scene, targets, w, h, frame.index))


class SyntheticOracleStage(SpatialStage):
    """Holds a ground-truth scene generator; returns the exact scene for the
    frame's timestamp. Used for end-to-end pipeline testing."""

    def __init__(self, generator):
        self.generator = generator

    def reconstruct(self, frame: MultiViewFrame, rig) -> GaussianScene:
        return self.generator(frame.index)


class ConstantDepthStage(SpatialStage):
    """Geometry-free baseline: back-projects the first input view's pixels to
    a fixed-depth pointmap and splats them."""

    def __init__(self, depth: float = 5.0, opacity: float = 0.8,
                 background=(0.0, 0.0, 0.0)):
        if depth <= 0:
            raise ValueError("depth must be positive")
        self.depth = depth
        self.opacity = opacity
        self.background = background

    def reconstruct(self, frame: MultiViewFrame, rig) -> GaussianScene:
        view = frame.views[0]
        e, k = rig[0]
        h, w = view.height, view.width
        u = (np.arange(w) + 0.5 - k.c_x) / k.focal_x
        v = (np.arange(h) + 0.5 - k.c_y) / k.focal_y
        cam_pts = np.empty((h, w, 3))
        cam_pts[:, :, 0] = self.depth * u[None, :]
        cam_pts[:, :, 1] = self.depth * v[:, None]
        cam_pts[:, :, 2] = self.depth
        world = (cam_pts - e.translation) @ e.rotation  # R^T (x - t), row-vector form
        pm = PointMap(world, np.ones((h, w), dtype=bool))
        opts = PointmapInitOptions(
            pixel_angle=1.0 / k.focal_x,
            opacity=self.opacity,
            camera_center=tuple(e.camera_center),
            background=tuple(self.background),
        )
        return gaussians_from_pointmap(pm, view, opts)


class Interpolator:
    """Contract: middle frame between two keyframe renders two timestamps apart."""

    def __call__(self, a: NovelFrame, b: NovelFrame) -> NovelFrame:
        if a.m != b.m:
            raise ValueError(f"view counts differ: {a.m} vs {b.m}")
        for va, vb in zip(a.views, b.views):
            if (va.height, va.width) != (vb.height, vb.width):
                raise ValueError("frame dimensions differ between endpoints")
        if a.index + 2 != b.index:
            raise ValueError(f"endpoints must be two timestamps apart, got {a.index} and {b.index}")
        views = self._middle(a, b)
        return NovelFrame(tuple(views), a.index + 1, PROVENANCE_INTERPOLATED)

    def _middle(self, a: NovelFrame, b: NovelFrame):
        raise NotImplementedError


class BlendInterpolator(Interpolator):
    """Per-pixel midpoint blend; each of the m views interpolated independently."""

    def _middle(self, a, b):
        return [FrameBuffer(0.5 * va.data + 0.5 * vb.data)
                for va, vb in zip(a.views, b.views)]


class SuperResStage:
    """Contract: exact 2x upscale of every view of every frame."""

    def __call__(self, frames) -> list:
        frames = list(frames)
        if not frames:
            raise ValueError("super-resolution input must be nonempty")
        h, w = frames[0].views[0].height, frames[0].views[0].width
        for f in frames:
            for v in f.views:
                if (v.height, v.width) != (h, w):
                    raise ValueError("super-resolution input dimensions are not uniform")
        out = []
        for f in frames:
            views = [self._upscale(v) for v in f.views]
            out.append(NovelFrame(tuple(views), f.index, PROVENANCE_UPSCALED))
        return out

    def _upscale(self, view: FrameBuffer) -> FrameBuffer:
        raise NotImplementedError


class BicubicSuperRes(SuperResStage):
    def _upscale(self, view: FrameBuffer) -> FrameBuffer:
        up = cv2.resize(view.data, (view.width * 2, view.height * 2),
                        interpolation=cv2.INTER_CUBIC)
        return FrameBuffer(np.clip(up, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Out-of-process stages over the frame wire format
# ---------------------------------------------------------------------------


class _WireClient:
    """Request/response framing against an external stage server: send the
    inputs as FRAME messages, read back the expected number of FRAMEs."""

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.host = host
        self.port = port
        self.timeout = timeout

    def exchange(self, out_messages: list, expect: int) -> list:
        with socket.create_connection((self.host, self.port), timeout=self.timeout) as sock:
            for msg in out_messages:
                sock.sendall(msg)
            replies = []
            for _ in range(expect):
                msg = wire.read_message(sock)
                if not isinstance(msg, wire.FrameMessage):
                    raise ConnectionError("external stage sent a non-FRAME reply")
                replies.append(msg.to_framebuffer())
            return replies


class ExternalInterpolator(Interpolator):
    """Delegates middle-frame synthesis to an out-of-process model. Sends the
    two endpoint views per novel view, receives one interpolated view."""

    def __init__(self, host: str, port: int):
        self.client = _WireClient(host, port)

    def _middle(self, a, b):
        views = []
        for va, vb in zip(a.views, b.views):
            out = self.client.exchange(
                [wire.encode_frame(a.index, va), wire.encode_frame(b.index, vb)], expect=1)
            views.append(out[0])
        return views


class ExternalSuperRes(SuperResStage):
    def __init__(self, host: str, port: int):
        self.client = _WireClient(host, port)

    def _upscale(self, view):
        out = self.client.exchange([wire.encode_frame(0, view)], expect=1)
        up = out[0]
        if (up.height, up.width) != (view.height * 2, view.width * 2):
            raise ValueError("external super-resolution did not upscale exactly 2x")
        return up


class ExternalSpatialStage(SpatialStage):
    """Delegates reconstruction + rendering to an out-of-process model: sends
    the n input views then one POSE_UPDATE per target, receives m rendered
    FRAMEs. The returned scene is empty, so the rasterize-equality invariant
    cannot be asserted for this implementation."""

    def __init__(self, host: str, port: int):
        self.client = _WireClient(host, port)

    def __call__(self, frame, rig, targets) -> SpatialStageOutput:
        if not targets:
            raise ValueError("at least one target pose is required")
        from .camera import pack_pose
        msgs = [wire.encode_frame(frame.index, v) for v in frame.views]
        for e, k in targets:
            p = pack_pose(e)
            focal = k.focal_x / (2.0 * k.c_x)  # normalized focal, centered principal point
            msgs.append(wire.encode_pose_update(
                tuple(p.quaternion.as_array()), tuple(p.translation), focal))
        views = self.client.exchange(msgs, expect=len(targets))
        rendered = NovelFrame(tuple(views), frame.index, PROVENANCE_KEYFRAME)
        return SpatialStageOutput(GaussianScene(()), rendered)

    def reconstruct(self, frame, rig):
        raise NotImplementedError("external spatial stage renders remotely")


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

SPATIAL_IMPLS = {
    "oracle": SyntheticOracleStage,
    "constant_depth": ConstantDepthStage,
    "external": ExternalSpatialStage,
}
INTER_IMPLS = {
    "blend": BlendInterpolator,
    "external": ExternalInterpolator,
}
SR_IMPLS = {
    "bicubic": BicubicSuperRes,
    "external": ExternalSuperRes,
}


def make_stage(registry: dict, name: str, **kwargs):
    try:
        cls = registry[name]
    except KeyError:
        raise ValueError(f"unknown stage implementation {name!r}; "
                         f"known: {sorted(registry)}") from None
    return cls(**kwargs)
