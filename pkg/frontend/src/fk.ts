/** Client-side forward kinematics from streamed 6-D rotations.
 *
 * Matches the server convention: the six values are the first two rows
 * of the rotation matrix (Gram-Schmidt orthonormalized), the third row
 * is their cross product; right-handed, y-up; children sit at
 * parent + parentGlobalRotation * offset.
 */

import type { Pose, SkeletonInfo } from "./protocol.js";

export type Vec3 = [number, number, number];
export type Mat3 = [Vec3, Vec3, Vec3]; // rows

function norm(v: Vec3): number {
  return Math.hypot(v[0], v[1], v[2]);
}

function scale(v: Vec3, s: number): Vec3 {
  return [v[0] * s, v[1] * s, v[2] * s];
}

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function rot6dToMatrix(six: number[]): Mat3 {
  const a1: Vec3 = [six[0], six[1], six[2]];
  const a2: Vec3 = [six[3], six[4], six[5]];
  const n1 = norm(a1);
  if (n1 < 1e-12) throw new Error("degenerate rotation features");
  const b1 = scale(a1, 1 / n1);
  const u2 = sub(a2, scale(b1, dot(b1, a2)));
  const n2 = norm(u2);
  if (n2 < 1e-12) throw new Error("degenerate rotation features");
  const b2 = scale(u2, 1 / n2);
  return [b1, b2, cross(b1, b2)];
}

export function matVec(m: Mat3, v: Vec3): Vec3 {
  return [dot(m[0], v), dot(m[1], v), dot(m[2], v)];
}

export function matMul(a: Mat3, b: Mat3): Mat3 {
  const bt: Mat3 = [
    [b[0][0], b[1][0], b[2][0]],
    [b[0][1], b[1][1], b[2][1]],
    [b[0][2], b[1][2], b[2][2]],
  ];
  return [
    [dot(a[0], bt[0]), dot(a[0], bt[1]), dot(a[0], bt[2])],
    [dot(a[1], bt[0]), dot(a[1], bt[1]), dot(a[1], bt[2])],
    [dot(a[2], bt[0]), dot(a[2], bt[1]), dot(a[2], bt[2])],
  ];
}

/** Yaw (radians about +y) as 6-D rotation features. */
export function yawToRot6d(theta: number): [number, number, number, number, number, number] {
  const c = Math.cos(theta);
  const s = Math.sin(theta);
  return [c, 0, s, 0, 1, 0];
}

/** Global joint positions of one pose. */
export function fkPositions(skeleton: SkeletonInfo, pose: Pose): Vec3[] {
  const n = skeleton.parents.length;
  const globals: Mat3[] = new Array(n);
  const positions: Vec3[] = new Array(n);
  for (let j = 0; j < n; j++) {
    const local = rot6dToMatrix(pose.rot6d.slice(j * 6, j * 6 + 6));
    const parent = skeleton.parents[j];
    if (parent < 0) {
      globals[j] = local;
      positions[j] = [...pose.root_pos] as Vec3;
    } else {
      globals[j] = matMul(globals[parent], local);
      positions[j] = add(
        positions[parent],
        matVec(globals[parent], skeleton.offsets[j] as Vec3),
      );
    }
  }
  return positions;
}

/** Bone segments (parent position, child position) of one pose. */
export function skeletonSegments(skeleton: SkeletonInfo, pose: Pose): [Vec3, Vec3][] {
  const positions = fkPositions(skeleton, pose);
  const segments: [Vec3, Vec3][] = [];
  for (let j = 0; j < skeleton.parents.length; j++) {
    const parent = skeleton.parents[j];
    if (parent >= 0) segments.push([positions[parent], positions[j]]);
  }
  return segments;
}
