/**
 * Binary wire protocol codec.
 *
 * Every message is little-endian and length-prefixed:
 *   u32 length, u8 type, payload
 * Type 1 FRAME:       u32 frameIndex, u16 width, u16 height, RGB8 payload
 * Type 2 POSE_UPDATE: 4xf32 quaternion (w,x,y,z), 3xf32 translation, f32 focal
 * Type 3 STATS:       5xf32 stage means (ms), f32 delay (ms), f32 fps
 */

export const MSG_FRAME = 1;
export const MSG_POSE_UPDATE = 2;
export const MSG_STATS = 3;

export const STATS_STAGES = [
  'camera_pose',
  'spatial',
  'rendering',
  'interpolation',
  'superres',
] as const;

export interface FrameMessage {
  kind: 'frame';
  frameIndex: number;
  width: number;
  height: number;
  /** width*height*3 bytes, row-major RGB */
  rgb: Uint8Array;
}

export interface PoseUpdateMessage {
  kind: 'pose_update';
  /** (w, x, y, z) */
  quaternion: [number, number, number, number];
  translation: [number, number, number];
  focal: number;
}

export interface StatsMessage {
  kind: 'stats';
  /** five per-stage means in STATS_STAGES order, ms */
  stageMeansMs: [number, number, number, number, number];
  delayMs: number;
  fps: number;
}

export type WireMessage = FrameMessage | PoseUpdateMessage | StatsMessage;

export class ProtocolError extends Error {}

/** Decode one complete length-prefixed message. */
export function decodeMessage(buf: Uint8Array): WireMessage {
  if (buf.byteLength < 5) {
    throw new ProtocolError(`message too short: ${buf.byteLength} bytes`);
  }
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  const length = view.getUint32(0, true);
  if (buf.byteLength !== 4 + length) {
    throw new ProtocolError(
      `length prefix ${length} does not match payload ${buf.byteLength - 4}`,
    );
  }
  return decodeBody(buf.subarray(4));
}

/** Decode a message body (type byte + payload, no length prefix). */
export function decodeBody(body: Uint8Array): WireMessage {
  const view = new DataView(body.buffer, body.byteOffset, body.byteLength);
  const type = body[0];
  if (type === MSG_FRAME) {
    const frameIndex = view.getUint32(1, true);
    const width = view.getUint16(5, true);
    const height = view.getUint16(7, true);
    const rgb = body.subarray(9);
    if (rgb.byteLength !== width * height * 3) {
      throw new ProtocolError(
        `FRAME payload ${rgb.byteLength} bytes does not match ${width}x${height}`,
      );
    }
    return { kind: 'frame', frameIndex, width, height, rgb };
  }
  if (type === MSG_POSE_UPDATE) {
    const f = (i: number) => view.getFloat32(1 + 4 * i, true);
    return {
      kind: 'pose_update',
      quaternion: [f(0), f(1), f(2), f(3)],
      translation: [f(4), f(5), f(6)],
      focal: f(7),
    };
  }
  if (type === MSG_STATS) {
    const f = (i: number) => view.getFloat32(1 + 4 * i, true);
    return {
      kind: 'stats',
      stageMeansMs: [f(0), f(1), f(2), f(3), f(4)],
      delayMs: f(5),
      fps: f(6),
    };
  }
  throw new ProtocolError(`unknown message type ${type}`);
}

export function encodePoseUpdate(
  quaternion: [number, number, number, number],
  translation: [number, number, number],
  focal: number,
): Uint8Array<ArrayBuffer> {
  const buf = new Uint8Array(4 + 1 + 8 * 4);
  const view = new DataView(buf.buffer);
  view.setUint32(0, 1 + 8 * 4, true);
  view.setUint8(4, MSG_POSE_UPDATE);
  const values = [...quaternion, ...translation, focal];
  values.forEach((v, i) => view.setFloat32(5 + 4 * i, v, true));
  return buf;
}

/**
 * Expand packed RGB into the RGBA layout ImageData wants. Alpha is opaque;
 * the RGB bytes pass through untouched so display is byte-exact.
 */
export function frameToRGBA(frame: FrameMessage): Uint8ClampedArray<ArrayBuffer> {
  const n = frame.width * frame.height;
  const rgba = new Uint8ClampedArray(n * 4);
  for (let i = 0; i < n; i++) {
    rgba[4 * i] = frame.rgb[3 * i];
    rgba[4 * i + 1] = frame.rgb[3 * i + 1];
    rgba[4 * i + 2] = frame.rgb[3 * i + 2];
    rgba[4 * i + 3] = 255;
  }
  return rgba;
}
