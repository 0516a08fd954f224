// Wire types of the steering service (docs/service_api.md, version 1).

export type Vec3 = [number, number, number];
export type Mat3 = [Vec3, Vec3, Vec3];

export interface PoseSnapshot {
  joints: Record<string, Vec3>;
  segments: [Vec3, Vec3][];
  frames: Record<string, { position: Vec3; rotation: Mat3 }>;
  base: { position: Vec3; rpy: Vec3 };
  foot_patches?: Vec3[][];
}

export interface CommandRanges {
  height: [number, number];
  roll: [number, number];
  pitch: [number, number];
  yaw: [number, number];
}

export interface ModelPayload {
  api_version: number;
  joints: { name: string; parent: string; child: string; limit: [number, number] }[];
  groups: Record<string, string[]>;
  feet_size: [number, number];
  standing_height: number;
  command_ranges: CommandRanges;
  default_pose: PoseSnapshot;
}

export interface PoseTarget {
  position: Vec3;
  rotation: Mat3;
}

export interface IkResponse {
  q_head: number[];
  q_left_arm: number[];
  q_right_arm: number[];
  q_upper: number[];
  command: { rpy: Vec3; h: number };
  pos_residuals: Record<string, number>;
  rot_residuals: Record<string, number>;
  iterations: number;
  converged: boolean;
  elapsed_ms: number;
  budget_ms: number;
}

export interface AmoResponse {
  q_ref_lower: number[];
  achieved: { rpy: Vec3; h: number };
  com_margin: number;
  within_limits: boolean;
  pose: PoseSnapshot;
  elapsed_ms: number;
}

export interface SweepCurveFile {
  axis: string;
  commanded: number[];
  achieved: number[];
  id_range: [number, number];
}
