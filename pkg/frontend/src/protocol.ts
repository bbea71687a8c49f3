/** Wire types of the monomotion session server (JSON over WebSocket). */

export interface SkeletonInfo {
  names: string[];
  parents: number[];
  offsets: number[][];
  foot_joints: number[];
  frame_time: number;
}

export interface HelloMessage {
  type: "hello";
  version: string;
  skeleton: SkeletonInfo;
  frame_time: number;
  r: number;
  conditional: boolean;
  coarse_length: number;
}

export interface ConstraintFrame {
  root_pos: [number, number, number];
  root_rot6d: [number, number, number, number, number, number];
}

export interface ConstraintsMessage {
  type: "constraints";
  frames: ConstraintFrame[];
  seed: number;
}

export interface Pose {
  rot6d: number[]; // J * 6 values, joint-major
  root_pos: [number, number, number];
  contacts: number[];
}

export interface FramesMessage {
  type: "frames";
  start_index: number;
  poses: Pose[];
}

export interface ErrorMessage {
  type: "error";
  code: string;
  detail: string;
}

export interface ByeMessage {
  type: "bye";
}

export type ServerMessage = HelloMessage | FramesMessage | ErrorMessage | ByeMessage;

export function parseServerMessage(raw: string): ServerMessage {
  const data = JSON.parse(raw);
  if (
    data === null ||
    typeof data !== "object" ||
    !["hello", "frames", "error", "bye"].includes(data.type)
  ) {
    throw new Error(`unrecognized server message: ${raw.slice(0, 120)}`);
  }
  return data as ServerMessage;
}

/** A pose is usable only if every numeric field is finite. */
export function validPose(pose: Pose, nJoints: number): boolean {
  return (
    pose.rot6d.length === nJoints * 6 &&
    pose.root_pos.length === 3 &&
    pose.rot6d.every(Number.isFinite) &&
    pose.root_pos.every(Number.isFinite)
  );
}
