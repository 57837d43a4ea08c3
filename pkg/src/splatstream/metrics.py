"""Image quality metrics and the visual-loss objective."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from skimage.metrics import structural_similarity

from .frames import FrameBuffer

# Identical images have infinite PSNR; cap keeps stream averages finite.
PSNR_CAP_DB = 99.0

PERCEPTUAL_IMPLS = ("zero", "dssim")


def _check_dims(a: FrameBuffer, b: FrameBuffer):
    if (a.height, a.width) != (b.height, b.width):
        raise ValueError(f"dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}")


def mse(a: FrameBuffer, b: FrameBuffer) -> float:
    _check_dims(a, b)
    return float(np.mean((a.data - b.data) ** 2))


def psnr(a: FrameBuffer, b: FrameBuffer) -> float:
    """Peak signal-to-noise ratio in dB, peak value 1.0, capped at 99 dB."""
    err = mse(a, b)
    if err == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(1.0 / err))


def stream_psnr(outputs, references) -> float:
    """Arithmetic mean of per-frame PSNR over two equal-length frame lists."""
    outputs, references = list(outputs), list(references)
    if not outputs:
        raise ValueError("frame lists must be nonempty")
    if len(outputs) != len(references):
        raise ValueError(f"length mismatch: {len(outputs)} vs {len(references)}")
    return float(np.mean([psnr(o, r) for o, r in zip(outputs, references)]))


@dataclass(frozen=True)
class LossConfig:
    lambda_mse: float = 1.0
    lambda_perceptual: float = 0.0
    perceptual_impl: str = "zero"

    def __post_init__(self):
        if self.lambda_mse < 0 or self.lambda_perceptual < 0:
            raise ValueError("loss weights must be nonnegative")
        if self.lambda_mse == 0 and self.lambda_perceptual == 0:
            raise ValueError("at least one loss weight must be positive")
        if self.perceptual_impl not in PERCEPTUAL_IMPLS:
            raise ValueError(f"unknown perceptual implementation {self.perceptual_impl!r}; "
                             f"known: {PERCEPTUAL_IMPLS}")


def _dssim(pred: FrameBuffer, target: FrameBuffer) -> float:
    """Structural-dissimilarity surrogate for the learned perceptual term."""
    win = min(7, pred.height, pred.width)
    if win % 2 == 0:
        win -= 1
    s = structural_similarity(pred.data, target.data, data_range=1.0,
                              channel_axis=2, win_size=max(win, 3))
    return float(1.0 - s)


def loss_eval(pred: FrameBuffer, target: FrameBuffer, cfg: LossConfig) -> float:
    """Weighted visual objective: mean squared error plus a pluggable
    perceptual term (the learned perceptual network is out of scope; the
    default term is 0, the alternative is 1 - SSIM)."""
    _check_dims(pred, target)
    total = cfg.lambda_mse * mse(pred, target)
    if cfg.lambda_perceptual > 0:
        if cfg.perceptual_impl == "dssim":
            total += cfg.lambda_perceptual * _dssim(pred, target)
        # "zero" contributes nothing
    return total


def format_metric_table(rows, headers=("Scene", "PSNR (dB)", "Runtime (ms)")) -> str:
    """Structured text table: per-scene rows with PSNR and runtime columns."""
    table = [tuple(str(c) for c in headers)]
    table += [tuple(str(c) for c in row) for row in rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
    lines = []
    for i, row in enumerate(table):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
