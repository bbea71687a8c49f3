/** Turn a drawn ground-plane stroke into root-channel constraints.
 *
 * Stroke points are (x, z) ground coordinates already sampled at
 * frame_time intervals (the canvas layer samples the pointer per
 * animation tick).  The heading is the stroke tangent, smoothed over
 * five samples to keep the character from twitching on pixelated
 * strokes.
 */

import { yawToRot6d } from "./fk.js";
import type { ConstraintFrame } from "./protocol.js";

export interface StrokePoint {
  x: number;
  z: number;
}

export const HEADING_WINDOW = 5;

export function strokeHeadings(points: StrokePoint[]): number[] {
  const n = points.length;
  const raw: number[] = new Array(n);
  for (let i = 0; i < n; i++) {
    const a = points[Math.max(0, i - 1)];
    const b = points[Math.min(n - 1, i + 1)];
    raw[i] = Math.atan2(b.x - a.x, b.z - a.z); // heading 0 looks along +z
  }
  // boxcar smoothing of the tangent vectors (not the angles: no wrap issues)
  const smoothed: number[] = new Array(n);
  const half = Math.floor(HEADING_WINDOW / 2);
  for (let i = 0; i < n; i++) {
    let sx = 0;
    let cz = 0;
    for (let k = -half; k <= half; k++) {
      const angle = raw[Math.min(n - 1, Math.max(0, i + k))];
      sx += Math.sin(angle);
      cz += Math.cos(angle);
    }
    smoothed[i] = Math.atan2(sx, cz);
  }
  return smoothed;
}

/** Constraint frames for a stroke; null when there is nothing to send. */
export function strokeToConstraints(
  points: StrokePoint[],
  rootHeight: number,
): ConstraintFrame[] | null {
  if (points.length < 2) return null;
  const headings = strokeHeadings(points);
  return points.map((p, i) => ({
    root_pos: [p.x, rootHeight, p.z] as [number, number, number],
    root_rot6d: yawToRot6d(headings[i]),
  }));
}

export function pathLength(points: { x: number; z: number }[]): number {
  let total = 0;
  for (let i = 1; i < points.length; i++) {
    total += Math.hypot(points[i].x - points[i - 1].x, points[i].z - points[i - 1].z);
  }
  return total;
}
