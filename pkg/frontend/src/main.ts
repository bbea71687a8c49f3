/** Browser studio: draw a trajectory, watch the character follow it.
 *
 * Steer mode samples the pointer once per animation frame while the
 * button is held, converts the stroke to root constraints, and streams
 * them to the session server.  Edit mode loads the coarse clip length
 * from /info and re-synthesizes on pose edits, highlighting the frames
 * the edit can influence.
 */

import { SessionClient } from "./client.js";
import { EditHistory, requestKeyframeEdit, type KeyframeResult } from "./keyframe.js";
import type { StrokePoint } from "./stroke.js";
import {
  createViewer,
  pendingFrames,
  projectFrame,
  renderableFrames,
} from "./viewer.js";

const SERVER = `ws://${location.hostname}:${location.port || 8765}`;
const HTTP = `http://${location.hostname}:${location.port || 8765}`;
const SCALE = 40; // world units -> pixels
const SEND_CHUNK = 30; // stroke samples per constraints message

const canvas = document.getElementById("stage") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const status = document.getElementById("status")!;

const viewer = createViewer();
const client = new SessionClient({
  url: `${SERVER}/session`,
  seed: Math.floor(Math.random() * 1e6),
  viewer,
  onUpdate: () => requestAnimationFrame(draw),
  onError: (code, detail) => {
    status.textContent = `error ${code}: ${detail}`;
  },
});
client.connect();

let drawing = false;
let stroke: StrokePoint[] = [];
let unsent: StrokePoint[] = [];
let lastPointer: StrokePoint | null = null;
let editBuffer: KeyframeResult | null = null;
const history = new EditHistory();

function toWorld(ev: PointerEvent): StrokePoint {
  const rect = canvas.getBoundingClientRect();
  return {
    x: (ev.clientX - rect.left - canvas.width / 2) / SCALE,
    z: (canvas.height / 2 - (ev.clientY - rect.top)) / SCALE,
  };
}

canvas.addEventListener("pointerdown", (ev) => {
  drawing = true;
  lastPointer = toWorld(ev);
});
canvas.addEventListener("pointermove", (ev) => {
  if (drawing) lastPointer = toWorld(ev);
});
window.addEventListener("pointerup", () => {
  drawing = false;
  flushStroke(true);
});

/** One sample per tick while held; chunks stream as they fill. */
function tick() {
  if (drawing && lastPointer) {
    stroke.push(lastPointer);
    unsent.push(lastPointer);
    if (unsent.length >= SEND_CHUNK) flushStroke(false);
  }
  draw();
  requestAnimationFrame(tick);
}

function flushStroke(force: boolean) {
  if (unsent.length === 0 || (!force && unsent.length < 2)) return;
  if (client.steer(unsent)) unsent = [];
}

function draw() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.save();
  ctx.translate(canvas.width / 2, canvas.height / 2);
  ctx.scale(SCALE, -SCALE);

  ctx.strokeStyle = "#888";
  ctx.lineWidth = 1 / SCALE;
  ctx.beginPath();
  for (const p of stroke) ctx.lineTo(p.x, p.z);
  ctx.stroke();

  const frames = renderableFrames(viewer);
  if (frames > 0 && viewer.skeleton) {
    const index = frames - 1; // never beyond what the server released
    const { segments, rootTrail } = projectFrame(viewer, index);
    ctx.strokeStyle = "#3a79d8";
    ctx.beginPath();
    for (const p of rootTrail) ctx.lineTo(p[0], p[1]);
    ctx.stroke();
    ctx.strokeStyle = "#1b9e48";
    ctx.lineWidth = 2 / SCALE;
    for (const [a, b] of segments) {
      ctx.beginPath();
      ctx.moveTo(a[0], a[1]);
      ctx.lineTo(b[0], b[1]);
      ctx.stroke();
    }
  }
  ctx.restore();

  status.textContent = viewer.offline
    ? "offline - strokes queued"
    : `frames ${frames}, pending ${Math.max(0, pendingFrames(viewer))} (r=${viewer.r})`;
}

const editButton = document.getElementById("edit") as HTMLButtonElement | null;
editButton?.addEventListener("click", async () => {
  const info = await (await fetch(`${HTTP}/info`)).json();
  const nJoints = info.skeleton.names.length;
  if (editBuffer) history.push(editBuffer.poses);
  // demo edit: straighten every joint at the middle coarse frame
  const identity = Array(nJoints).fill([1, 0, 0, 0, 1, 0]).flat();
  editBuffer = await requestKeyframeEdit(
    HTTP,
    [{ index: Math.floor(info.coarse_length / 2), rot6d: identity }],
    { nJoints, coarseLength: info.coarse_length, r: info.r },
  );
  status.textContent = `key-frame edit: frames ${editBuffer.affected[0][0]}..${editBuffer.affected[0][1]} affected`;
});

const undoButton = document.getElementById("undo") as HTMLButtonElement | null;
undoButton?.addEventListener("click", () => {
  const restored = history.undo();
  if (restored) {
    editBuffer = { poses: restored, affected: [] };
    status.textContent = "restored previous playback";
  }
});

tick();
