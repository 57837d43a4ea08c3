/**
 * Orbit camera: azimuth/elevation/radius around the scene origin, converted
 * to the world-to-camera quaternion + translation the streaming engine
 * expects (camera axes: +x right, +y down, +z forward).
 */

export interface OrbitState {
  /** radians, 0 places the camera on the +z axis */
  azimuth: number;
  /** radians, positive looks down from above */
  elevation: number;
  radius: number;
}

export interface Pose {
  /** unit quaternion (w, x, y, z) with w >= 0 */
  quaternion: [number, number, number, number];
  translation: [number, number, number];
}

type Vec3 = [number, number, number];
type Mat3 = [Vec3, Vec3, Vec3];

const EPS = 1e-12;

function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

function norm(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

function scale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function orbitEye(state: OrbitState): Vec3 {
  const { azimuth, elevation, radius } = state;
  return [
    radius * Math.cos(elevation) * Math.sin(azimuth),
    radius * Math.sin(elevation),
    radius * Math.cos(elevation) * Math.cos(azimuth),
  ];
}

/** World-to-camera rotation for a camera at `eye` looking at the origin. */
function lookAtOrigin(eye: Vec3): Mat3 {
  const d = norm(eye);
  if (d < EPS) throw new Error('orbit radius must be positive');
  const fwd = scale(eye, -1 / d);
  let up: Vec3 = [0, 1, 0];
  let right = cross(fwd, up);
  if (norm(right) < EPS) {
    // Looking straight along the up axis: pick any perpendicular.
    up = Math.abs(fwd[0]) < 0.9 ? [1, 0, 0] : [0, 0, 1];
    right = cross(fwd, up);
  }
  right = scale(right, 1 / norm(right));
  const down = cross(fwd, right);
  return [right, down, fwd];
}

/** Unit quaternion (w, x, y, z) with w >= 0 from a rotation matrix. */
export function quaternionFromMatrix(r: Mat3): [number, number, number, number] {
  const trace = r[0][0] + r[1][1] + r[2][2];
  let w: number, x: number, y: number, z: number;
  if (trace > 0) {
    const s = Math.sqrt(trace + 1) * 2;
    w = s / 4;
    x = (r[2][1] - r[1][2]) / s;
    y = (r[0][2] - r[2][0]) / s;
    z = (r[1][0] - r[0][1]) / s;
  } else if (r[0][0] >= r[1][1] && r[0][0] >= r[2][2]) {
    const s = Math.sqrt(1 + r[0][0] - r[1][1] - r[2][2]) * 2;
    w = (r[2][1] - r[1][2]) / s;
    x = s / 4;
    y = (r[0][1] + r[1][0]) / s;
    z = (r[0][2] + r[2][0]) / s;
  } else if (r[1][1] >= r[2][2]) {
    const s = Math.sqrt(1 - r[0][0] + r[1][1] - r[2][2]) * 2;
    w = (r[0][2] - r[2][0]) / s;
    x = (r[0][1] + r[1][0]) / s;
    y = s / 4;
    z = (r[1][2] + r[2][1]) / s;
  } else {
    const s = Math.sqrt(1 - r[0][0] - r[1][1] + r[2][2]) * 2;
    w = (r[1][0] - r[0][1]) / s;
    x = (r[0][2] + r[2][0]) / s;
    y = (r[1][2] + r[2][1]) / s;
    z = s / 4;
  }
  const n = Math.hypot(w, x, y, z);
  let q: [number, number, number, number] = [w / n, x / n, y / n, z / n];
  if (q[0] < 0) q = [-q[0], -q[1], -q[2], -q[3]];
  return q;
}

export function orbitToPose(state: OrbitState): Pose {
  const eye = orbitEye(state);
  const r = lookAtOrigin(eye);
  const translation: Vec3 = [
    -(r[0][0] * eye[0] + r[0][1] * eye[1] + r[0][2] * eye[2]),
    -(r[1][0] * eye[0] + r[1][1] * eye[1] + r[1][2] * eye[2]),
    -(r[2][0] * eye[0] + r[2][1] * eye[1] + r[2][2] * eye[2]),
  ];
  return { quaternion: quaternionFromMatrix(r), translation };
}

const MAX_ELEVATION = Math.PI / 2 - 1e-3;

/** Clamp orbit parameters to a valid, gimbal-safe range. */
export function clampOrbit(state: OrbitState, minRadius = 0.1, maxRadius = 100): OrbitState {
  return {
    azimuth: state.azimuth,
    elevation: Math.min(MAX_ELEVATION, Math.max(-MAX_ELEVATION, state.elevation)),
    radius: Math.min(maxRadius, Math.max(minRadius, state.radius)),
  };
}

/**
 * Rate limiter for steering messages: at most one pose update per keyframe
 * interval, with the latest state winning.
 */
export class PoseUpdateThrottle {
  private lastSentMs = -Infinity;

  constructor(private readonly minIntervalMs: number) {}

  /** Returns true when a message may be sent at `nowMs`; records the send. */
  trySend(nowMs: number): boolean {
    if (nowMs - this.lastSentMs < this.minIntervalMs) return false;
    this.lastSentMs = nowMs;
    return true;
  }
}
