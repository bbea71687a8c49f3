/** Playback state and pure rendering of streamed skeleton frames.
 *
 * The viewer only ever renders frames the server has released: the
 * trailing r frames of the constraint history stay pending until a
 * later exchange finalizes them.  Rendering is a pure function of the
 * received poses -- the client synthesizes nothing.
 */

import { skeletonSegments, type Vec3 } from "./fk.js";
import type { FramesMessage, HelloMessage, Pose, SkeletonInfo } from "./protocol.js";
import type { StrokePoint } from "./stroke.js";

export interface ViewerState {
  skeleton: SkeletonInfo | null;
  frameTime: number;
  r: number;
  poses: Pose[]; // gap-free, in stream order
  constraintsSent: number;
  stroke: StrokePoint[];
  playhead: number;
  offline: boolean; // queued-send indicator
}

export function createViewer(): ViewerState {
  return {
    skeleton: null,
    frameTime: 1 / 30,
    r: 0,
    poses: [],
    constraintsSent: 0,
    stroke: [],
    playhead: 0,
    offline: false,
  };
}

export function applyHello(state: ViewerState, hello: HelloMessage): void {
  state.skeleton = hello.skeleton;
  state.frameTime = hello.frame_time;
  state.r = hello.r;
}

/** Append a frames message; indices must continue the stream exactly. */
export function ingestFrames(state: ViewerState, message: FramesMessage): void {
  if (message.start_index !== state.poses.length) {
    throw new Error(
      `frame gap: have ${state.poses.length}, got start ${message.start_index}`,
    );
  }
  state.poses.push(...message.poses);
}

/** Frames the server still withholds (r after every exchange). */
export function pendingFrames(state: ViewerState): number {
  return state.constraintsSent - state.poses.length;
}

/** Highest frame index the viewer may render (exclusive). */
export function renderableFrames(state: ViewerState): number {
  return state.poses.length;
}

export interface Projected {
  segments: [[number, number], [number, number]][];
  rootTrail: [number, number][];
}

/** Orthographic top-down projection of one frame plus the root trail.
 * Pure: same state and index always yield identical geometry. */
export function projectFrame(state: ViewerState, index: number): Projected {
  if (!state.skeleton) throw new Error("no skeleton yet");
  if (index >= renderableFrames(state)) {
    throw new Error(`frame ${index} not yet released (have ${state.poses.length})`);
  }
  const toPlane = (p: Vec3): [number, number] => [p[0], p[2]];
  const segments = skeletonSegments(state.skeleton, state.poses[index]).map(
    ([a, b]) => [toPlane(a), toPlane(b)] as [[number, number], [number, number]],
  );
  const rootTrail = state.poses
    .slice(0, index + 1)
    .map((pose) => toPlane(pose.root_pos as Vec3));
  return { segments, rootTrail };
}

/** Ground-plane root path of everything received so far. */
export function rootPath(state: ViewerState): { x: number; z: number }[] {
  return state.poses.map((p) => ({ x: p.root_pos[0], z: p.root_pos[2] }));
}
