"""Live serve mode: drives the snippet pipeline over a synthetic or recorded
source and speaks the binary wire protocol to viewer clients.

Each wire message (already length-prefixed, see `wire`) travels as one binary
WebSocket message. FRAME flows engine -> client, POSE_UPDATE client -> engine
(applied at the next snippet boundary), STATS engine -> client at a
configurable cadence.
"""

from __future__ import annotations

import asyncio
import threading
import time

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import wire
from .camera import PoseEmbedding, Quaternion, intrinsics_from_normalized, unpack_pose
from .scheduler import STAGES, LatencyLedger, SnippetPlan, StreamState, _Timer, emit_snippet
from .stages import SpatialStageOutput, render_targets


class StreamEngine:
    """Single-session streaming engine: one novel viewpoint, steerable between
    snippets. The engine owns all mutable stream state; pose updates land in a
    mailbox and are applied only at snippet boundaries so each snippet stays
    internally consistent."""

    def __init__(self, source, rig, target, spatial, interpolator, superres,
                 width: int, height: int, fps: float = 30.0,
                 stats_interval_s: float = 1.0, pace: bool = False):
        self.source = source
        self.rig = rig
        self.target = target  # (Extrinsics, Intrinsics)
        self.spatial = spatial
        self.interpolator = interpolator
        self.superres = superres
        self.width = width
        self.height = height
        self.fps = fps
        self.stats_interval_s = stats_interval_s
        self.pace = pace
        self._lock = threading.Lock()
        self._pending_pose: wire.PoseUpdateMessage | None = None
        self.pose_pending = False

    def update_pose(self, msg: wire.PoseUpdateMessage) -> None:
        with self._lock:
            self._pending_pose = msg
            self.pose_pending = True

    def handle_message(self, data: bytes) -> None:
        msg = wire.decode_message(data)
        if isinstance(msg, wire.PoseUpdateMessage):
            self.update_pose(msg)
        # FRAME/STATS from a client are ignored

    def _take_pending_pose(self):
        with self._lock:
            msg, self._pending_pose = self._pending_pose, None
            self.pose_pending = False
        return msg

    def _apply_pose(self, msg: wire.PoseUpdateMessage):
        emb = PoseEmbedding(Quaternion.from_array(msg.quaternion), np.asarray(msg.translation))
        e = unpack_pose(emb)
        k = intrinsics_from_normalized(msg.focal, self.width, self.height)
        self.target = (e, k)

    def messages(self):
        """Generator of encoded wire messages for one full stream run."""
        interval_ms = 1000.0 / self.fps if self.fps > 0 else 0.0
        ledger = LatencyLedger(input_interval_ms=interval_ms)
        state = StreamState()
        with _Timer(ledger, "camera_pose"):
            rig = self.rig  # static cameras: resolved once, reused every snippet
        it = iter(self.source)
        t_start = time.perf_counter()
        last_stats = t_start
        emitted_count = 0
        cached_scene = None
        cached_index = -1
        lo = 0
        frames = {}
        next_in = 0
        exhausted = False

        def fetch(idx):
            nonlocal next_in, exhausted
            while not exhausted and idx not in frames:
                try:
                    f = next(it)
                except StopIteration:
                    exhausted = True
                    return None
                if f.index % 2 == 0:
                    frames[f.index] = f
                next_in = f.index + 1
            return frames.pop(idx, None)

        while True:
            snippet_t0 = time.perf_counter()
            pose_msg = self._take_pending_pose()
            if pose_msg is not None:
                self._apply_pose(pose_msg)
            targets = [self.target]

            def spatial_pass(frame):
                with _Timer(ledger, "spatial"):
                    scene = self.spatial.reconstruct(frame, rig)
                with _Timer(ledger, "rendering"):
                    rendered = render_targets(scene, targets, self.width, self.height,
                                              frame.index)
                return SpatialStageOutput(scene, rendered)

            if cached_index == lo and cached_scene is not None:
                # Keyframe scene is reused; re-render only if the pose moved.
                with _Timer(ledger, "rendering"):
                    rendered = render_targets(cached_scene, targets, self.width,
                                              self.height, lo)
                out_lo = SpatialStageOutput(cached_scene, rendered)
            else:
                f_lo = fetch(lo)
                if f_lo is None:
                    break
                out_lo = spatial_pass(f_lo)
            f_hi = fetch(lo + 2)
            if f_hi is None:
                break
            out_hi = spatial_pass(f_hi)

            with _Timer(ledger, "interpolation"):
                middle = self.interpolator(out_lo.rendered, out_hi.rendered)
            with _Timer(ledger, "superres"):
                upscaled = self.superres([out_lo.rendered, middle, out_hi.rendered])

            plan = SnippetPlan(lo, is_first=(lo == 0))
            for frame in emit_snippet(state, plan, upscaled):
                emitted_count += 1
                yield wire.encode_frame(frame.index, frame.views[0])

            cached_scene = out_hi.scene
            cached_index = lo + 2
            lo += 2

            now = time.perf_counter()
            if now - last_stats >= self.stats_interval_s:
                last_stats = now
                yield self._stats_message(ledger, emitted_count, now - t_start)
            if self.pace and interval_ms > 0:
                budget = 2.0 * interval_ms / 1000.0
                sleep_s = budget - (now - snippet_t0)
                if sleep_s > 0:
                    time.sleep(sleep_s)

        if emitted_count:
            yield self._stats_message(ledger, emitted_count,
                                      time.perf_counter() - t_start)

    def _stats_message(self, ledger: LatencyLedger, emitted: int, elapsed_s: float):
        means = []
        for stage in STAGES:
            vals = ledger.samples[stage]
            means.append(float(np.mean(vals)) if vals else 0.0)
        delay = 2.0 * ledger.input_interval_ms + sum(means)
        fps = emitted / elapsed_s if elapsed_s > 0 else 0.0
        return wire.encode_stats(means, delay, fps)


def create_app(engine: StreamEngine):
    app = FastAPI(title="splatstream")
    app.state.engine = engine

    @app.websocket("/stream")
    async def stream(ws: WebSocket):
        await ws.accept()

        async def receiver():
            try:
                while True:
                    data = await ws.receive_bytes()
                    engine.handle_message(data)
            except (WebSocketDisconnect, RuntimeError):
                pass

        recv_task = asyncio.create_task(receiver())
        loop = asyncio.get_running_loop()
        it = engine.messages()
        try:
            while True:
                msg = await loop.run_in_executor(None, lambda: next(it, None))
                if msg is None:
                    break
                await ws.send_bytes(msg)
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            recv_task.cancel()
            try:
                await ws.close()
            except RuntimeError:
                pass

    return app
