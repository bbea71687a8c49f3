/** Coarse key-frame editing against the server's /keyframe endpoint.
 *
 * Edits are validated client-side before anything is sent; the undo
 * stack restores the previous playback buffer exactly.
 */

import type { Pose } from "./protocol.js";

export interface KeyframeEdit {
  index: number;
  rot6d: number[];
  root_pos?: [number, number, number];
}

export function validateEdit(edit: KeyframeEdit, nJoints: number, coarseLength: number): void {
  if (!Number.isInteger(edit.index) || edit.index < 0 || edit.index >= coarseLength) {
    throw new Error(`key-frame index ${edit.index} outside 0..${coarseLength - 1}`);
  }
  if (edit.rot6d.length !== nJoints * 6 || !edit.rot6d.every(Number.isFinite)) {
    throw new Error("pose must supply 6 finite rotation values per joint");
  }
  if (edit.root_pos && (edit.root_pos.length !== 3 || !edit.root_pos.every(Number.isFinite))) {
    throw new Error("root position must be 3 finite values");
  }
}

export interface KeyframeResult {
  poses: Pose[];
  /** fine-rate frame span the edits can influence, for highlighting */
  affected: [number, number][];
}

export function affectedSpan(
  editIndex: number,
  coarseLength: number,
  fineLength: number,
  r: number,
): [number, number] {
  const center = (editIndex * (fineLength - 1)) / (coarseLength - 1);
  return [Math.max(0, Math.floor(center - r)), Math.min(fineLength - 1, Math.ceil(center + r))];
}

/** Playback snapshots for exact undo of key-frame edits. */
export class EditHistory {
  private stack: Pose[][] = [];

  push(poses: Pose[]): void {
    this.stack.push(poses.map((p) => ({
      rot6d: [...p.rot6d],
      root_pos: [...p.root_pos] as [number, number, number],
      contacts: [...p.contacts],
    })));
  }

  get depth(): number {
    return this.stack.length;
  }

  undo(): Pose[] | null {
    return this.stack.pop() ?? null;
  }
}

export async function requestKeyframeEdit(
  baseUrl: string,
  edits: KeyframeEdit[],
  options: { nJoints: number; coarseLength: number; r: number; deterministic?: boolean },
): Promise<KeyframeResult> {
  for (const edit of edits) {
    validateEdit(edit, options.nJoints, options.coarseLength);
  }
  const response = await fetch(`${baseUrl}/keyframe`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ edits, deterministic: options.deterministic ?? true }),
  });
  const data = await response.json();
  if (data.type !== "frames") {
    throw new Error(`keyframe edit failed: ${JSON.stringify(data).slice(0, 120)}`);
  }
  const poses = data.poses as Pose[];
  const affected = edits.map((edit) =>
    affectedSpan(edit.index, options.coarseLength, poses.length, options.r),
  );
  return { poses, affected };
}
