// In-distribution / out-of-distribution classification of the intermediate
// command against the server-provided sampling ranges.

import type { CommandRanges, Vec3 } from "./types.js";

export interface OodStatus {
  ood: boolean;
  axes: string[];
}

export function oodStatus(rpy: Vec3, h: number, ranges: CommandRanges): OodStatus {
  const axes: string[] = [];
  const check = (name: string, v: number, r: [number, number]) => {
    if (v < r[0] || v > r[1]) axes.push(name);
  };
  check("roll", rpy[0], ranges.roll);
  check("pitch", rpy[1], ranges.pitch);
  check("yaw", rpy[2], ranges.yaw);
  check("height", h, ranges.height);
  return { ood: axes.length > 0, axes };
}
