// Pure scene-building: server pose snapshots to projected 2D draw lists.
// The client never runs kinematics; every vertex below came over the wire.

import type { OrbitCamera } from "./camera.js";
import type { PoseSnapshot, Vec3 } from "./types.js";

export interface Line2 {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  depth: number;
  kind: "bone" | "foot" | "gizmo" | "ground";
}

export interface Marker2 {
  x: number;
  y: number;
  depth: number;
  label: string;
}

export function buildLines(pose: PoseSnapshot, cam: OrbitCamera,
                           width: number, height: number): Line2[] {
  const lines: Line2[] = [];
  const push = (a: Vec3, b: Vec3, kind: Line2["kind"]) => {
    const pa = cam.project(a, width, height);
    const pb = cam.project(b, width, height);
    if (!pa || !pb) return;
    lines.push({ x1: pa[0], y1: pa[1], x2: pb[0], y2: pb[1],
                 depth: (pa[2] + pb[2]) / 2, kind });
  };
  for (const [a, b] of pose.segments) push(a, b, "bone");
  if (pose.foot_patches) {
    for (const patch of pose.foot_patches) {
      for (let i = 0; i < patch.length; i++) {
        push(patch[i], patch[(i + 1) % patch.length], "foot");
      }
    }
  }
  // ground grid around the origin
  for (let i = -2; i <= 2; i++) {
    push([i * 0.25, -0.5, 0], [i * 0.25, 0.5, 0], "ground");
    push([-0.5, i * 0.25, 0], [0.5, i * 0.25, 0], "ground");
  }
  lines.sort((a, b) => b.depth - a.depth); // far first
  return lines;
}

export function frameMarkers(pose: PoseSnapshot, names: string[],
                             cam: OrbitCamera, width: number,
                             height: number): Marker2[] {
  const out: Marker2[] = [];
  for (const name of names) {
    const fr = pose.frames[name];
    if (!fr) continue;
    const p = cam.project(fr.position, width, height);
    if (p) out.push({ x: p[0], y: p[1], depth: p[2], label: name });
  }
  return out;
}

/** Merge a lower-body pose update into the previous full snapshot: only the
 * segments/joints the server recomputed change (the /amo response carries a
 * full snapshot, so this is a straight replacement that keeps the old one
 * on malformed input). */
export function mergePose(prev: PoseSnapshot | null,
                          next: PoseSnapshot | null | undefined): PoseSnapshot | null {
  if (!next || !Array.isArray(next.segments)) return prev;
  return next;
}
