import { describe, expect, it } from 'vitest';

import {
  decodeMessage,
  encodePoseUpdate,
  frameToRGBA,
  ProtocolError,
} from './protocol.js';

/** Golden 2x2 FRAME fixture: header + red, green, blue, white pixels. */
function goldenFrame(): Uint8Array {
  const buf = new Uint8Array(4 + 9 + 12);
  const view = new DataView(buf.buffer);
  view.setUint32(0, 21, true); // body length
  view.setUint8(4, 1); // MSG_FRAME
  view.setUint32(5, 7, true); // frame index
  view.setUint16(9, 2, true); // width
  view.setUint16(11, 2, true); // height
  buf.set([255, 0, 0, 0, 255, 0, 0, 0, 255, 255, 255, 255], 13);
  return buf;
}

describe('FRAME decode', () => {
  it('decodes the golden 2x2 fixture byte-exactly', () => {
    const msg = decodeMessage(goldenFrame());
    if (msg.kind !== 'frame') throw new Error('expected a frame');
    expect(msg.frameIndex).toBe(7);
    expect(msg.width).toBe(2);
    expect(msg.height).toBe(2);
    expect(Array.from(msg.rgb)).toEqual([
      255, 0, 0, 0, 255, 0, 0, 0, 255, 255, 255, 255,
    ]);
  });

  it('expands RGB to RGBA without altering channel bytes', () => {
    const msg = decodeMessage(goldenFrame());
    if (msg.kind !== 'frame') throw new Error('expected a frame');
    const rgba = frameToRGBA(msg);
    expect(Array.from(rgba)).toEqual([
      255, 0, 0, 255, 0, 255, 0, 255, 0, 0, 255, 255, 255, 255, 255, 255,
    ]);
  });

  it('rejects payload size mismatches', () => {
    const buf = goldenFrame().subarray(0, 24);
    const fixed = new Uint8Array(buf);
    new DataView(fixed.buffer).setUint32(0, 20, true);
    expect(() => decodeMessage(fixed)).toThrow(ProtocolError);
  });

  it('rejects a wrong length prefix', () => {
    const buf = goldenFrame();
    new DataView(buf.buffer).setUint32(0, 99, true);
    expect(() => decodeMessage(buf)).toThrow(/length prefix/);
  });
});

describe('POSE_UPDATE encode', () => {
  it('lays out quaternion, translation, focal as little-endian f32', () => {
    const buf = encodePoseUpdate([1, 0, 0, 0], [0.5, -0.5, 2], 0.9);
    expect(buf.byteLength).toBe(4 + 1 + 32);
    const view = new DataView(buf.buffer);
    expect(view.getUint32(0, true)).toBe(33);
    expect(view.getUint8(4)).toBe(2);
    const values = Array.from({ length: 8 }, (_, i) => view.getFloat32(5 + 4 * i, true));
    expect(values[0]).toBe(1);
    expect(values[4]).toBeCloseTo(0.5, 6);
    expect(values[5]).toBeCloseTo(-0.5, 6);
    expect(values[6]).toBeCloseTo(2, 6);
    expect(values[7]).toBeCloseTo(0.9, 6);
  });

  it('round-trips through the decoder', () => {
    const msg = decodeMessage(encodePoseUpdate([0.7, 0.1, -0.1, 0.7], [1, 2, 3], 1.2));
    if (msg.kind !== 'pose_update') throw new Error('expected a pose update');
    expect(msg.quaternion[0]).toBeCloseTo(0.7, 6);
    expect(msg.translation[2]).toBeCloseTo(3, 6);
    expect(msg.focal).toBeCloseTo(1.2, 6);
  });
});

describe('STATS decode', () => {
  it('decodes five stage means plus delay and fps', () => {
    const buf = new Uint8Array(4 + 1 + 28);
    const view = new DataView(buf.buffer);
    view.setUint32(0, 29, true);
    view.setUint8(4, 3);
    [1.5, 52.1, 9.6, 19.3, 0.6, 149.8, 24].forEach((v, i) =>
      view.setFloat32(5 + 4 * i, v, true),
    );
    const msg = decodeMessage(buf);
    if (msg.kind !== 'stats') throw new Error('expected stats');
    expect(msg.stageMeansMs[1]).toBeCloseTo(52.1, 4);
    expect(msg.delayMs).toBeCloseTo(149.8, 4);
    expect(msg.fps).toBeCloseTo(24, 4);
  });

  it('rejects unknown message types', () => {
    const buf = new Uint8Array([2, 0, 0, 0, 9, 0]);
    expect(() => decodeMessage(buf)).toThrow(/unknown message type/);
  });
});
