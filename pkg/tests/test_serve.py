import numpy as np
import pytest

from splatstream import wire
from splatstream.camera import pack_pose
from splatstream.frames import NovelFrame
from splatstream.rasterizer import rasterize
from splatstream.server import StreamEngine, create_app
from splatstream.stages import BicubicSuperRes, BlendInterpolator, SyntheticOracleStage
from splatstream.synthetic import SyntheticSceneGenerator, SyntheticSceneSpec

WIDTH, HEIGHT = 24, 18


def make_engine(duration=9, velocity=0.0, stats_interval_s=1000.0, fps=30.0):
    spec = SyntheticSceneSpec(seed=11, num_gaussians=10, duration=duration,
                              velocity=velocity)
    gen = SyntheticSceneGenerator(spec)
    cams = gen.cameras(WIDTH, HEIGHT)
    rig = cams[:2]
    engine = StreamEngine(
        source=gen.frame_source(rig, WIDTH, HEIGHT),
        rig=rig,
        target=cams[2],
        spatial=SyntheticOracleStage(gen.scene_at),
        interpolator=BlendInterpolator(),
        superres=BicubicSuperRes(),
        width=WIDTH, height=HEIGHT,
        fps=fps, stats_interval_s=stats_interval_s,
    )
    return engine, gen, cams


def upscaled_reference(gen, t, camera):
    ref = rasterize(gen.scene_at(t), *camera, WIDTH, HEIGHT)
    return BicubicSuperRes()([NovelFrame((ref,), t)])[0].views[0]


class TestStreamEngine:
    def test_frame_stream_is_unit_stride_and_upscaled(self):
        engine, _, _ = make_engine(duration=9)
        msgs = [wire.decode_message(m) for m in engine.messages()]
        frames = [m for m in msgs if isinstance(m, wire.FrameMessage)]
        assert [f.frame_index for f in frames] == list(range(9))
        assert all((f.width, f.height) == (2 * WIDTH, 2 * HEIGHT) for f in frames)

    def test_keyframes_match_reference_renders(self):
        engine, gen, cams = make_engine(duration=5)
        frames = [wire.decode_message(m) for m in engine.messages()]
        frames = [m for m in frames if isinstance(m, wire.FrameMessage)]
        expected = upscaled_reference(gen, 0, cams[2])
        np.testing.assert_array_equal(frames[0].to_framebuffer().to_uint8(),
                                      expected.to_uint8())

    def test_pose_update_changes_next_keyframe(self):
        # Send a POSE_UPDATE after the first snippet: the following snippet's
        # keyframes must be rendered from the new viewpoint, byte-exactly
        # matching an independent render at that pose.
        engine, gen, cams = make_engine(duration=9)
        new_e, new_k = cams[4]
        emb = pack_pose(new_e)
        update = wire.encode_pose_update(tuple(emb.quaternion.as_array()),
                                         tuple(emb.translation), 1.0)

        it = engine.messages()
        received = []
        while len(received) < 3:  # first snippet: frames 0, 1, 2 at cams[2]
            msg = wire.decode_message(next(it))
            if isinstance(msg, wire.FrameMessage):
                received.append(msg)
        engine.handle_message(update)
        assert engine.pose_pending
        for raw in it:
            msg = wire.decode_message(raw)
            if isinstance(msg, wire.FrameMessage):
                received.append(msg)
        assert not engine.pose_pending
        assert [f.frame_index for f in received] == list(range(9))

        before = upscaled_reference(gen, 2, cams[2])
        np.testing.assert_array_equal(received[2].to_framebuffer().to_uint8(),
                                      before.to_uint8())
        for t in (4, 6, 8):
            after = upscaled_reference(gen, t, cams[4])
            np.testing.assert_array_equal(received[t].to_framebuffer().to_uint8(),
                                          after.to_uint8())

    def test_final_stats_message(self):
        engine, _, _ = make_engine(duration=7, fps=30.0)
        msgs = [wire.decode_message(m) for m in engine.messages()]
        stats = [m for m in msgs if isinstance(m, wire.StatsMessage)]
        assert stats, "a closing stats message is expected"
        last = stats[-1]
        assert len(last.stage_means_ms) == 5
        interval_ms = 1000.0 / 30.0
        assert last.delay_ms == pytest.approx(
            2.0 * interval_ms + sum(last.stage_means_ms), rel=1e-4)
        assert last.fps > 0

    def test_non_pose_client_messages_ignored(self, rng):
        engine, _, _ = make_engine()
        from splatstream.frames import FrameBuffer
        engine.handle_message(wire.encode_frame(0, FrameBuffer(rng.uniform(0, 1, (4, 4, 3)))))
        assert not engine.pose_pending


class TestWebSocketTransport:
    def test_stream_endpoint_speaks_the_wire_protocol(self):
        from starlette.testclient import TestClient

        engine, gen, cams = make_engine(duration=5)
        app = create_app(engine)
        frames = []
        with TestClient(app) as client:
            with client.websocket_connect("/stream") as ws:
                while len(frames) < 5:
                    msg = wire.decode_message(ws.receive_bytes())
                    if isinstance(msg, wire.FrameMessage):
                        frames.append(msg)
        assert [f.frame_index for f in frames] == list(range(5))
        expected = upscaled_reference(gen, 0, cams[2])
        np.testing.assert_array_equal(frames[0].to_framebuffer().to_uint8(),
                                      expected.to_uint8())

    def test_pose_update_over_websocket_reaches_engine(self):
        from starlette.testclient import TestClient

        engine, gen, cams = make_engine(duration=9)
        emb = pack_pose(cams[4][0])
        update = wire.encode_pose_update(tuple(emb.quaternion.as_array()),
                                         tuple(emb.translation), 1.0)
        app = create_app(engine)
        frames = {}
        with TestClient(app) as client:
            with client.websocket_connect("/stream") as ws:
                sent = False
                while len(frames) < 9:
                    msg = wire.decode_message(ws.receive_bytes())
                    if isinstance(msg, wire.FrameMessage):
                        frames[msg.frame_index] = msg
                        if not sent and msg.frame_index >= 2:
                            ws.send_bytes(update)
                            sent = True
        # The update lands at some later snippet boundary; the final keyframe
        # must come from the new viewpoint.
        after = upscaled_reference(gen, 8, cams[4])
        np.testing.assert_array_equal(frames[8].to_framebuffer().to_uint8(),
                                      after.to_uint8())
