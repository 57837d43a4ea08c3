"""Keyframe-snippet scheduling: stride-2 cadence, first-frame discard rule,
keyframe spatial caching, and latency accounting."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .frames import MultiViewFrame, NovelFrame
from .stages import SpatialStageOutput, render_targets

logger = logging.getLogger(__name__)

STAGES = ("camera_pose", "spatial", "rendering", "interpolation", "superres")


class StreamConsistencyError(RuntimeError):
    """Emitted frame indices would not advance by exactly one."""


@dataclass(frozen=True)
class SnippetPlan:
    keyframe_lo: int
    is_first: bool

    def __post_init__(self):
        if self.keyframe_lo < 0 or self.keyframe_lo % 2 != 0:
            raise ValueError("snippet keyframes start at even indices")

    @property
    def middle(self) -> int:
        return self.keyframe_lo + 1

    @property
    def keyframe_hi(self) -> int:
        return self.keyframe_lo + 2


@dataclass(frozen=True)
class SnippetSchedule:
    snippets: tuple
    trailing_frame: int | None  # unpaired final frame index, if any


def plan_snippets(num_input_frames: int) -> SnippetSchedule:
    """Snippets (0,1,2), (2,3,4), ... covering the largest even index
    <= num_input_frames - 1; consecutive snippets share one keyframe."""
    if num_input_frames < 3:
        raise ValueError("need at least 3 input frames to form a snippet")
    last_even = (num_input_frames - 1) - (num_input_frames - 1) % 2
    snippets = tuple(SnippetPlan(t, is_first=(t == 0)) for t in range(0, last_even - 1, 2))
    trailing = num_input_frames - 1 if (num_input_frames - 1) % 2 == 1 else None
    return SnippetSchedule(snippets, trailing)


@dataclass
class StreamState:
    next_emit_index: int = 0
    cached_spatial: SpatialStageOutput | None = None  # shared keyframe result
    cached_index: int = -1


def emit_snippet(state: StreamState, plan: SnippetPlan, frames) -> list:
    """Apply the discard rule: the first snippet emits all three frames, later
    snippets drop their first frame (it was already emitted as the previous
    snippet's last keyframe)."""
    frames = list(frames)
    if len(frames) != 3:
        raise ValueError("a snippet carries exactly 3 frames")
    expected = (plan.keyframe_lo, plan.middle, plan.keyframe_hi)
    for f, idx in zip(frames, expected):
        if f.index != idx:
            raise StreamConsistencyError(f"frame index {f.index} does not match plan index {idx}")
    emitted = frames if plan.is_first else frames[1:]
    if emitted[0].index != state.next_emit_index:
        raise StreamConsistencyError(
            f"next emission must be frame {state.next_emit_index}, got {emitted[0].index}")
    state.next_emit_index = emitted[-1].index + 1
    return emitted


@dataclass
class LatencyLedger:
    """Per-stage runtime samples plus the end-to-end bookkeeping needed for
    the delay and amortized-runtime derivations."""

    input_interval_ms: float
    samples: dict = field(default_factory=lambda: {s: [] for s in STAGES})
    total_pipeline_ms: float = 0.0
    emitted_frames: int = 0
    dropped_snippets: int = 0

    def add(self, stage: str, ms: float) -> None:
        if ms < 0:
            raise ValueError("runtime samples must be nonnegative")
        self.samples[stage].append(ms)

    def stage_mean(self, stage: str) -> float:
        vals = self.samples[stage]
        if not vals:
            raise ValueError(f"no samples recorded for stage {stage!r}")
        return float(np.mean(vals))


@dataclass(frozen=True)
class LatencyReport:
    stage_means_ms: dict
    component_sum_ms: float
    delay_ms: float
    amortized_ms_per_frame: float
    over_budget: bool
    budget_ms: float


def latency_report(ledger: LatencyLedger, budget_ms: float = 1000.0) -> LatencyReport:
    """Per-stage means, the 2-keyframe buffering delay, and amortized runtime
    (total pipeline time / emitted frames, preprocessing excluded)."""
    means = {s: ledger.stage_mean(s) for s in STAGES}
    component_sum = float(sum(means.values()))
    delay = 2.0 * ledger.input_interval_ms + component_sum
    amortized = (ledger.total_pipeline_ms / ledger.emitted_frames
                 if ledger.emitted_frames else float("nan"))
    return LatencyReport(means, component_sum, delay, amortized,
                         over_budget=delay >= budget_ms, budget_ms=budget_ms)


def format_latency_report(report: LatencyReport) -> str:
    rows = [("Component", "Runtime (ms)")]
    labels = {
        "camera_pose": "Camera Pose Predictor",
        "spatial": "Spatial Module",
        "rendering": "Gaussian Rendering",
        "interpolation": "Interpolation Net",
        "superres": "Super Res Net",
    }
    for stage in STAGES:
        rows.append((labels[stage], f"{report.stage_means_ms[stage]:.1f}"))
    rows.append(("Component sum", f"{report.component_sum_ms:.1f}"))
    rows.append(("Stream delay", f"{report.delay_ms:.1f}"))
    rows.append(("Amortized per frame", f"{report.amortized_ms_per_frame:.1f}"))
    width = max(len(r[0]) for r in rows) + 2
    lines = [f"{name:<{width}}{value:>12}" for name, value in rows]
    if report.over_budget:
        lines.append(f"WARNING: delay exceeds {report.budget_ms:.0f} ms budget")
    return "\n".join(lines)


class _Timer:
    def __init__(self, ledger: LatencyLedger, stage: str):
        self.ledger = ledger
        self.stage = stage

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ledger.add(self.stage, (time.perf_counter() - self.t0) * 1000.0)
        return False


@dataclass(frozen=True)
class PipelineConfig:
    input_fps: float = 30.0
    trailing_mode: str = "drop"  # drop | duplicate
    drop_on_lag: bool = False  # live mode: keep real-time by skipping snippets
    prefetch_spatial: bool = False  # overlap next keyframe's spatial pass


@dataclass(frozen=True)
class PipelineResult:
    frames: list  # emitted NovelFrames, upscaled, unit-stride indices
    ledger: LatencyLedger
    trailing_frame: int | None


class StageFailure(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


def run_pipeline(source, rig, targets, spatial, interpolator, superres,
                 config: PipelineConfig = PipelineConfig(),
                 pose_resolver=None) -> PipelineResult:
    """Drive the full snippet pipeline over a frame source.

    The pose set is resolved once at t=0 and reused for every snippet
    (static-camera rule). Each even keyframe's spatial pass runs once: the
    high keyframe of one snippet is cached as the low keyframe of the next.
    Source exhaustion mid-snippet flushes completed snippets and reports the
    trailing unpaired frame.
    """
    if len(rig) < 2:
        raise ValueError("need at least 2 input views")
    interval_ms = 1000.0 / config.input_fps if config.input_fps > 0 else 0.0
    ledger = LatencyLedger(input_interval_ms=interval_ms)
    state = StreamState()
    emitted: list[NovelFrame] = []

    it = iter(source)
    pending: dict[int, MultiViewFrame] = {}
    exhausted = False
    next_index = 0

    def fetch(idx: int):
        nonlocal exhausted, next_index
        if idx in pending:
            return pending.pop(idx)
        if idx < next_index:
            raise StreamConsistencyError(f"frame {idx} was already consumed")
        while not exhausted and idx not in pending:
            try:
                f = next(it)
            except StopIteration:
                exhausted = True
                return None
            if f.index != next_index:
                raise StreamConsistencyError(
                    f"source produced frame {f.index}, expected {next_index}")
            next_index += 1
            # Odd input frames never feed the spatial stage; only keyframes
            # are retained.
            if f.index % 2 == 0:
                pending[f.index] = f
        return pending.pop(idx, None)

    # Pose resolution happens exactly once, before any snippet.
    with _Timer(ledger, "camera_pose"):
        resolved_rig = pose_resolver(rig) if pose_resolver is not None else rig
    pose_snapshot = [(e.rotation.copy(), e.translation.copy()) for e, _ in resolved_rig]

    def spatial_pass(frame: MultiViewFrame) -> SpatialStageOutput:
        try:
            with _Timer(ledger, "spatial"):
                scene = spatial.reconstruct(frame, resolved_rig)
            h, w = frame.views[0].height, frame.views[0].width
            with _Timer(ledger, "rendering"):
                rendered = render_targets(scene, targets, w, h, frame.index)
            return SpatialStageOutput(scene, rendered)
        except NotImplementedError:
            # External stages render remotely; time the whole call as spatial
            # and record a zero rendering sample.
            with _Timer(ledger, "spatial"):
                out = spatial(frame, resolved_rig, targets)
            ledger.add("rendering", 0.0)
            return out

    executor = ThreadPoolExecutor(max_workers=1) if config.prefetch_spatial else None
    prefetched: tuple[int, object] | None = None  # (index, Future)
    t_start = time.perf_counter()
    last_render: NovelFrame | None = None
    skip_lo: int | None = None
    try:
        lo = 0
        while True:
            snippet_t0 = time.perf_counter()
            # Static-camera rule: the pose set must be identical at every snippet.
            for (r0, t0), (e, _) in zip(pose_snapshot, resolved_rig):
                if not (np.array_equal(r0, e.rotation) and np.array_equal(t0, e.translation)):
                    raise StreamConsistencyError("rig poses changed mid-stream")

            if state.cached_index == lo and state.cached_spatial is not None:
                out_lo = state.cached_spatial
            else:
                frame_lo = fetch(lo)
                if frame_lo is None:
                    break
                out_lo = spatial_pass(frame_lo)

            if prefetched is not None and prefetched[0] == lo + 2:
                out_hi = prefetched[1].result()
                prefetched = None
            else:
                frame_hi = fetch(lo + 2)
                if frame_hi is None:
                    break
                out_hi = spatial_pass(frame_hi)

            if executor is not None:
                nxt = fetch(lo + 4)
                if nxt is not None:
                    prefetched = (lo + 4, executor.submit(spatial_pass, nxt))

            try:
                with _Timer(ledger, "interpolation"):
                    middle = interpolator(out_lo.rendered, out_hi.rendered)
            except Exception as exc:  # noqa: BLE001 - abort with stage identity
                raise StageFailure("interpolation", exc) from exc
            try:
                with _Timer(ledger, "superres"):
                    upscaled = superres([out_lo.rendered, middle, out_hi.rendered])
            except Exception as exc:  # noqa: BLE001
                raise StageFailure("superres", exc) from exc

            plan = SnippetPlan(lo, is_first=(lo == 0 or skip_lo == lo))
            if skip_lo == lo:
                state.next_emit_index = lo
                skip_lo = None
            emitted.extend(emit_snippet(state, plan, upscaled))
            last_render = upscaled[-1]
            state.cached_spatial = out_hi
            state.cached_index = lo + 2

            snippet_ms = (time.perf_counter() - snippet_t0) * 1000.0
            lo += 2
            if config.drop_on_lag and interval_ms > 0 and snippet_ms > 2.0 * interval_ms:
                # Real-time backpressure: skip the oldest pending keyframe pair
                # so the stream stays live instead of accumulating latency.
                logger.warning("dropping snippet (%d, %d): processing %.1f ms exceeds %.1f ms",
                               lo, lo + 2, snippet_ms, 2.0 * interval_ms)
                ledger.dropped_snippets += 1
                state.cached_spatial = None
                state.cached_index = -1
                prefetched = None
                lo += 2
                skip_lo = lo
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    trailing = None
    if exhausted:
        last_input = next_index - 1
        if last_input >= 1 and last_input % 2 == 1 and emitted:
            trailing = last_input
            if config.trailing_mode == "duplicate" and last_render is not None:
                dup = NovelFrame(last_render.views, trailing, last_render.provenance)
                if dup.index == state.next_emit_index:
                    state.next_emit_index += 1
                    emitted.append(dup)
                    trailing = None
            else:
                logger.info("trailing unpaired input frame %d dropped", trailing)

    ledger.total_pipeline_ms = (time.perf_counter() - t_start) * 1000.0
    ledger.emitted_frames = len(emitted)
    return PipelineResult(emitted, ledger, trailing)
