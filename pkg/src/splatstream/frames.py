"""Image buffers and multi-view frame containers.

All pipeline math runs on linear-range [0, 1] float buffers; 8-bit
quantization happens only on export.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image

PROVENANCE_KEYFRAME = "keyframe"
PROVENANCE_INTERPOLATED = "interpolated"
PROVENANCE_UPSCALED = "upscaled"
_PROVENANCES = (PROVENANCE_KEYFRAME, PROVENANCE_INTERPOLATED, PROVENANCE_UPSCALED)


@dataclass(frozen=True)
class FrameBuffer:
    """Row-major RGB image, float64 in [0, 1], shape (height, width, 3)."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 3 or d.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) array, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ValueError("framebuffer contains non-finite values")
        object.__setattr__(self, "data", d)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @classmethod
    def constant(cls, width: int, height: int, color=(0.0, 0.0, 0.0)) -> "FrameBuffer":
        return cls(np.broadcast_to(np.asarray(color, dtype=np.float64), (height, width, 3)).copy())

    def to_uint8(self) -> np.ndarray:
        return np.clip(np.rint(self.data * 255.0), 0, 255).astype(np.uint8)

    @classmethod
    def from_uint8(cls, arr: np.ndarray) -> "FrameBuffer":
        return cls(np.asarray(arr, dtype=np.float64) / 255.0)

    def save(self, path) -> None:
        Image.fromarray(self.to_uint8(), mode="RGB").save(path)

    @classmethod
    def load(cls, path) -> "FrameBuffer":
        with Image.open(path) as im:
            return cls.from_uint8(np.asarray(im.convert("RGB")))


def _check_uniform(views, minimum: int, label: str):
    if len(views) < minimum:
        raise ValueError(f"{label} requires at least {minimum} views, got {len(views)}")
    h, w = views[0].height, views[0].width
    for i, v in enumerate(views):
        if (v.height, v.width) != (h, w):
            raise ValueError(f"view {i} has dimensions {v.width}x{v.height}, expected {w}x{h}")


@dataclass(frozen=True)
class MultiViewFrame:
    """Synchronized input views at one timestamp (n >= 2)."""

    views: tuple
    index: int

    def __post_init__(self):
        views = tuple(self.views)
        _check_uniform(views, 2, "MultiViewFrame")
        if self.index < 0:
            raise ValueError("timestamp index must be nonnegative")
        object.__setattr__(self, "views", views)

    @property
    def n(self) -> int:
        return len(self.views)


@dataclass(frozen=True)
class NovelFrame:
    """Rendered novel views at one timestamp (m >= 1) with a provenance tag."""

    views: tuple
    index: int
    provenance: str = PROVENANCE_KEYFRAME

    def __post_init__(self):
        views = tuple(self.views)
        _check_uniform(views, 1, "NovelFrame")
        if self.index < 0:
            raise ValueError("timestamp index must be nonnegative")
        if self.provenance not in _PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "views", views)

    @property
    def m(self) -> int:
        return len(self.views)
