/**
 * Canvas viewer: wires the WebSocket transport, frame gate, orbit controls,
 * and HUD together. This is the only DOM-dependent module.
 */

import { formatHud, hudFromStats } from './hud.js';
import { OrbitState, PoseUpdateThrottle, clampOrbit, orbitToPose } from './orbit.js';
import { decodeMessage, encodePoseUpdate, frameToRGBA } from './protocol.js';
import { FrameGate, ReconnectBackoff } from './stream.js';

export interface ViewerOptions {
  url: string;
  canvas: HTMLCanvasElement;
  hud?: HTMLElement;
  /** normalized focal sent with pose updates */
  focal?: number;
  /** minimum ms between pose updates (one keyframe interval at 30 fps input) */
  poseIntervalMs?: number;
}

export class Viewer {
  private readonly gate = new FrameGate();
  private readonly backoff = new ReconnectBackoff();
  private readonly throttle: PoseUpdateThrottle;
  private readonly focal: number;
  private orbit: OrbitState = { azimuth: 0, elevation: 0, radius: 4 };
  private ws: WebSocket | null = null;
  private closed = false;
  private posePending = false;

  constructor(private readonly opts: ViewerOptions) {
    this.focal = opts.focal ?? 1.0;
    this.throttle = new PoseUpdateThrottle(opts.poseIntervalMs ?? 2000 / 30);
  }

  start(): void {
    this.closed = false;
    this.connect();
    this.bindControls();
  }

  stop(): void {
    this.closed = true;
    this.ws?.close();
  }

  private connect(): void {
    const ws = new WebSocket(this.opts.url);
    ws.binaryType = 'arraybuffer';
    this.ws = ws;
    ws.onopen = () => {
      this.backoff.connected();
      this.gate.reset();
    };
    ws.onmessage = (ev: MessageEvent<ArrayBuffer>) => {
      this.handleMessage(new Uint8Array(ev.data));
    };
    ws.onclose = () => {
      if (this.closed) return;
      setTimeout(() => this.connect(), this.backoff.nextDelayMs());
    };
  }

  private handleMessage(data: Uint8Array): void {
    const msg = decodeMessage(data);
    if (msg.kind === 'frame') {
      if (!this.gate.accept(msg)) return;
      const ctx = this.opts.canvas.getContext('2d');
      if (!ctx) return;
      this.opts.canvas.width = msg.width;
      this.opts.canvas.height = msg.height;
      ctx.putImageData(new ImageData(frameToRGBA(msg), msg.width, msg.height), 0, 0);
      if (msg.frameIndex % 2 === 0) this.posePending = false;
    } else if (msg.kind === 'stats' && this.opts.hud) {
      this.opts.hud.textContent = formatHud(hudFromStats(msg, this.posePending)).join('\n');
    }
  }

  private sendPose(): void {
    if (!this.ws || this.ws.readyState !== WebSocket.OPEN) return;
    if (!this.throttle.trySend(performance.now())) return;
    const pose = orbitToPose(this.orbit);
    this.ws.send(encodePoseUpdate(pose.quaternion, pose.translation, this.focal));
    this.posePending = true;
  }

  private bindControls(): void {
    const canvas = this.opts.canvas;
    let dragging = false;
    canvas.addEventListener('pointerdown', () => {
      dragging = true;
    });
    canvas.addEventListener('pointerup', () => {
      dragging = false;
    });
    canvas.addEventListener('pointermove', (ev: PointerEvent) => {
      if (!dragging) return;
      this.orbit = clampOrbit({
        azimuth: this.orbit.azimuth + ev.movementX * 0.01,
        elevation: this.orbit.elevation + ev.movementY * 0.01,
        radius: this.orbit.radius,
      });
      this.sendPose();
    });
    canvas.addEventListener('wheel', (ev: WheelEvent) => {
      ev.preventDefault();
      this.orbit = clampOrbit({ ...this.orbit, radius: this.orbit.radius * (1 + ev.deltaY * 1e-3) });
      this.sendPose();
    });
  }
}
