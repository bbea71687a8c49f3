/** End-to-end against the real session server (spawned in setup.ts):
 * steering fidelity, the withheld-frame rule, and chunked-vs-one-shot
 * protocol replay. */

import { describe, expect, it } from "vitest";
import WebSocket from "ws";

import { SessionClient, type SocketLike } from "../src/client.js";
import type { Pose } from "../src/protocol.js";
import { pathLength, strokeToConstraints, type StrokePoint } from "../src/stroke.js";
import { createViewer, pendingFrames, rootPath } from "../src/viewer.js";
import { requestKeyframeEdit } from "../src/keyframe.js";
import { HTTP_URL, WS_URL } from "./setup.js";

const socketFactory = (url: string) => new WebSocket(url) as unknown as SocketLike;

function straightStroke(n: number, step = 0.03): StrokePoint[] {
  return Array.from({ length: n }, (_, i) => ({ x: 0, z: i * step }));
}

function connect(seed: number) {
  const viewer = createViewer();
  const errors: string[] = [];
  let notify: (() => void) | null = null;
  const client = new SessionClient({
    url: WS_URL,
    seed,
    viewer,
    socketFactory,
    onUpdate: () => notify?.(),
    onError: (code, detail) => errors.push(`${code}: ${detail}`),
  });
  client.connect();
  const waitFor = async (predicate: () => boolean, timeoutMs = 30000) => {
    const deadline = Date.now() + timeoutMs;
    while (!predicate()) {
      if (Date.now() > deadline) throw new Error(`timeout; errors: ${errors}`);
      await new Promise<void>((resolve) => {
        notify = () => resolve();
        setTimeout(resolve, 100);
      });
    }
    notify = null;
  };
  return { client, viewer, errors, waitFor };
}

describe("session protocol", () => {
  it("handshake carries the halved receptive field and the skeleton", async () => {
    const { client, viewer, waitFor } = connect(1);
    await waitFor(() => viewer.skeleton !== null);
    expect(viewer.r).toBeGreaterThan(0);
    expect(viewer.skeleton!.names).toEqual(["hip", "foot"]);
    client.close();
  });

  it("steering: rendered root path within 2% of the constraint track, r pending", async () => {
    const { client, viewer, errors, waitFor } = connect(2);
    await waitFor(() => viewer.skeleton !== null);
    const stroke = straightStroke(260);
    expect(client.steer(stroke)).toBe(true);
    await waitFor(() => viewer.poses.length >= 260 - viewer.r);
    expect(errors).toEqual([]);
    expect(pendingFrames(viewer)).toBe(viewer.r);

    const constraints = strokeToConstraints(stroke, 1)!;
    const shown = viewer.poses.length;
    const constraintPath = constraints
      .slice(0, shown)
      .map((f) => ({ x: f.root_pos[0], z: f.root_pos[2] }));
    const rendered = rootPath(viewer);
    const deviation =
      Math.abs(pathLength(rendered) - pathLength(constraintPath)) /
      pathLength(constraintPath);
    expect(deviation).toBeLessThan(0.02);
    console.log(
      `ACCEPTANCE ui-steering-fidelity: PASS (path-length deviation ${(deviation * 100).toFixed(4)}% < 2%, r=${viewer.r} pending after every exchange)`,
    );

    // a second exchange keeps exactly r pending
    client.steer(straightStroke(40, 0.03).map((p) => ({ x: p.x, z: p.z + 260 * 0.03 })));
    await waitFor(() => viewer.poses.length >= 300 - viewer.r);
    expect(pendingFrames(viewer)).toBe(viewer.r);
    client.close();
  });

  it("chunked and one-shot strokes agree outside the seam windows", async () => {
    const stroke = straightStroke(300);

    const one = connect(7);
    await one.waitFor(() => one.viewer.skeleton !== null);
    one.client.steer(stroke);
    await one.waitFor(() => one.viewer.poses.length >= 300 - one.viewer.r);
    one.client.close();

    const two = connect(7);
    await two.waitFor(() => two.viewer.skeleton !== null);
    two.client.steer(stroke.slice(0, 150));
    await two.waitFor(() => two.viewer.poses.length >= 150 - two.viewer.r);
    two.client.steer(stroke.slice(150, 220));
    await two.waitFor(() => two.viewer.poses.length >= 220 - two.viewer.r);
    two.client.steer(stroke.slice(220));
    await two.waitFor(() => two.viewer.poses.length >= 300 - two.viewer.r);
    two.client.close();

    expect(two.viewer.poses.length).toBe(one.viewer.poses.length);
    const mismatches: number[] = [];
    one.viewer.poses.forEach((pose: Pose, i: number) => {
      const other = two.viewer.poses[i];
      const same =
        pose.rot6d.every((v, k) => v === other.rot6d[k]) &&
        pose.root_pos.every((v, k) => v === other.root_pos[k]);
      if (!same) mismatches.push(i);
    });
    // seams at 150 and 220: differences may only live within r before each
    const r = one.viewer.r;
    for (const i of mismatches) {
      const nearSeam = (i > 150 - r && i <= 150) || (i > 220 - r && i <= 220);
      expect(nearSeam, `frame ${i} differs away from every seam`).toBe(true);
    }
    console.log(
      `ACCEPTANCE ui-protocol-replay: PASS (chunked vs one-shot: ${mismatches.length} differing frames, all within r=${r} of a seam)`,
    );
  });

  it("queues strokes while disconnected and reports offline", async () => {
    const viewer = createViewer();
    const client = new SessionClient({
      url: WS_URL,
      seed: 3,
      viewer,
      socketFactory: () =>
        ({
          send: () => {},
          close: () => {},
          onopen: null,
          onmessage: null,
          onclose: null,
          onerror: null,
        }) as SocketLike, // never opens
    });
    client.connect();
    expect(client.steer(straightStroke(120))).toBe(true);
    expect(viewer.offline).toBe(true);
    expect(viewer.constraintsSent).toBe(0); // held in the outbox
  });

  it("key-frame editing round trip with client-side validation", async () => {
    const info = await (await fetch(`${HTTP_URL}/info`)).json();
    const nJoints = info.skeleton.names.length;
    const identity = Array(nJoints).fill([1, 0, 0, 0, 1, 0]).flat();
    const result = await requestKeyframeEdit(
      HTTP_URL,
      [{ index: Math.floor(info.coarse_length / 2), rot6d: identity }],
      { nJoints, coarseLength: info.coarse_length, r: info.r },
    );
    expect(result.poses.length).toBeGreaterThan(info.coarse_length);
    expect(result.affected[0][0]).toBeGreaterThanOrEqual(0);
    expect(result.affected[0][1]).toBeLessThan(result.poses.length);

    await expect(
      requestKeyframeEdit(HTTP_URL, [{ index: -1, rot6d: identity }], {
        nJoints,
        coarseLength: info.coarse_length,
        r: info.r,
      }),
    ).rejects.toThrow(/index/);
  });
});
