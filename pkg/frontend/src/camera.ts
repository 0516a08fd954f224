// Minimal orbit camera and perspective projection for the stick-figure
// canvas. Keeping the math here (instead of a 3D library) keeps the client
// dependency-free; the scene is a few hundred line segments.

import type { Vec3 } from "./types.js";

export class OrbitCamera {
  yaw = 0.6; // rad, around +z
  pitch = 0.35; // rad above the horizon
  distance = 2.6; // m
  target: Vec3 = [0, 0, 0.7];
  fov = 50 * (Math.PI / 180);

  orbit(dYaw: number, dPitch: number): void {
    this.yaw += dYaw;
    this.pitch = Math.min(1.45, Math.max(-1.45, this.pitch + dPitch));
  }

  zoom(factor: number): void {
    this.distance = Math.min(8, Math.max(0.5, this.distance * factor));
  }

  eye(): Vec3 {
    const cp = Math.cos(this.pitch);
    return [
      this.target[0] + this.distance * cp * Math.cos(this.yaw),
      this.target[1] + this.distance * cp * Math.sin(this.yaw),
      this.target[2] + this.distance * Math.sin(this.pitch),
    ];
  }

  /** World point -> [screenX, screenY, depth]; null when behind the eye. */
  project(p: Vec3, width: number, height: number): [number, number, number] | null {
    const eye = this.eye();
    // camera basis: forward toward target, right, up (world up = +z)
    const f = norm3(sub3(this.target, eye));
    const r = norm3(cross3(f, [0, 0, 1]));
    const u = cross3(r, f);
    const d = sub3(p, eye);
    const x = dot3(d, r);
    const y = dot3(d, u);
    const z = dot3(d, f);
    if (z <= 1e-6) return null;
    const scale = (0.5 * height) / Math.tan(this.fov / 2);
    return [width / 2 + (scale * x) / z, height / 2 - (scale * y) / z, z];
  }

  /** Move a world point within the camera-parallel plane through it so that
   * it lands under the given screen displacement (used for target drags). */
  dragInViewPlane(p: Vec3, dxPx: number, dyPx: number, width: number,
                  height: number): Vec3 {
    const eye = this.eye();
    const f = norm3(sub3(this.target, eye));
    const r = norm3(cross3(f, [0, 0, 1]));
    const u = cross3(r, f);
    const z = dot3(sub3(p, eye), f);
    const scale = (0.5 * height) / Math.tan(this.fov / 2);
    const wx = (dxPx * z) / scale;
    const wy = (-dyPx * z) / scale;
    return [
      p[0] + r[0] * wx + u[0] * wy,
      p[1] + r[1] * wx + u[1] * wy,
      p[2] + r[2] * wx + u[2] * wy,
    ];
  }
}

export function sub3(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function dot3(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function cross3(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function norm3(a: Vec3): Vec3 {
  const n = Math.hypot(a[0], a[1], a[2]) || 1;
  return [a[0] / n, a[1] / n, a[2] / n];
}
