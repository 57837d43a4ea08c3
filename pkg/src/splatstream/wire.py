"""Binary wire protocol for streaming frames, pose updates, and stats.

Messages are little-endian and length-prefixed:
    u32 length, u8 type, payload
Type 1 FRAME:       u32 frame_index, u16 width, u16 height, RGB8 payload
Type 2 POSE_UPDATE: 4xf32 quaternion (w,x,y,z), 3xf32 translation, f32 focal
Type 3 STATS:       5xf32 stage means (ms), f32 delay (ms), f32 fps
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .frames import FrameBuffer

MSG_FRAME = 1
MSG_POSE_UPDATE = 2
MSG_STATS = 3

STATS_STAGES = ("camera_pose", "spatial", "rendering", "interpolation", "superres")


@dataclass(frozen=True)
class FrameMessage:
    frame_index: int
    width: int
    height: int
    rgb: bytes  # width*height*3 bytes, row-major

    def to_framebuffer(self) -> FrameBuffer:
        arr = np.frombuffer(self.rgb, dtype=np.uint8).reshape(self.height, self.width, 3)
        return FrameBuffer.from_uint8(arr)


@dataclass(frozen=True)
class PoseUpdateMessage:
    quaternion: tuple  # (w, x, y, z)
    translation: tuple  # (x, y, z)
    focal: float


@dataclass(frozen=True)
class StatsMessage:
    stage_means_ms: tuple  # 5 floats, STATS_STAGES order
    delay_ms: float
    fps: float


def encode_frame(frame_index: int, fb: FrameBuffer) -> bytes:
    rgb = fb.to_uint8().tobytes()
    body = struct.pack("<BIHH", MSG_FRAME, frame_index, fb.width, fb.height) + rgb
    return struct.pack("<I", len(body)) + body


def encode_pose_update(quaternion, translation, focal: float) -> bytes:
    body = struct.pack("<B7ff", MSG_POSE_UPDATE, *quaternion, *translation, focal)
    return struct.pack("<I", len(body)) + body


def encode_stats(stage_means_ms, delay_ms: float, fps: float) -> bytes:
    if len(stage_means_ms) != 5:
        raise ValueError("expected 5 per-stage means")
    body = struct.pack("<B7f", MSG_STATS, *stage_means_ms, delay_ms, fps)
    return struct.pack("<I", len(body)) + body


def decode_message(buf: bytes):
    """Decode one length-prefixed message; the length prefix must be included."""
    if len(buf) < 5:
        raise ValueError("message too short")
    (length,) = struct.unpack_from("<I", buf, 0)
    if len(buf) != 4 + length:
        raise ValueError(f"length prefix {length} does not match payload {len(buf) - 4}")
    return decode_body(buf[4:])


def decode_body(body: bytes):
    """Decode a message body (type byte + payload, no length prefix)."""
    msg_type = body[0]
    if msg_type == MSG_FRAME:
        frame_index, width, height = struct.unpack_from("<IHH", body, 1)
        rgb = body[9:]
        if len(rgb) != width * height * 3:
            raise ValueError("FRAME payload size mismatch")
        return FrameMessage(frame_index, width, height, rgb)
    if msg_type == MSG_POSE_UPDATE:
        vals = struct.unpack_from("<8f", body, 1)
        return PoseUpdateMessage(tuple(vals[0:4]), tuple(vals[4:7]), vals[7])
    if msg_type == MSG_STATS:
        vals = struct.unpack_from("<7f", body, 1)
        return StatsMessage(tuple(vals[0:5]), vals[5], vals[6])
    raise ValueError(f"unknown message type {msg_type}")


def read_message(sock):
    """Read one message from a blocking socket; returns the decoded message
    or None on clean EOF."""
    header = _read_exact(sock, 4)
    if header is None:
        return None
    (length,) = struct.unpack("<I", header)
    body = _read_exact(sock, length)
    if body is None:
        raise ConnectionError("socket closed mid-message")
    return decode_body(body)


def _read_exact(sock, n: int):
    chunks = []
    remaining = n
    while remaining > 0:
        chunk = sock.recv(remaining)
        if not chunk:
            if remaining == n:
                return None
            raise ConnectionError("socket closed mid-message")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)
