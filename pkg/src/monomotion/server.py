"""WebSocket session server for interactive conditional generation.

All messages are JSON texts.  On connect the server sends
``hello{version, skeleton, frame_time, r}``.  Each
``constraints{frames, seed}`` message extends the client's session and
is answered with ``frames{start_index, poses}``; frame indices across
replies are gap-free and strictly increasing.  Malformed messages get
an ``error`` reply and the session survives; a constraint-shape
mismatch closes the connection.  ``POST /keyframe`` re-synthesizes the
clip from coarse pose edits.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import __version__
from .checkpoint import Checkpoint
from .motion import Motion, rotation_channel_slice, displacement_slice
from .synthesis import InteractiveSession, keyframe_edit


def _skeleton_payload(skeleton):
    return {
        "names": list(skeleton.names),
        "parents": [int(p) for p in skeleton.parents],
        "offsets": skeleton.offsets.tolist(),
        "foot_joints": [int(f) for f in skeleton.foot_joints],
        "frame_time": skeleton.frame_time,
    }


def _hello(checkpoint):
    _, r = checkpoint.receptive_field()
    return {
        "type": "hello",
        "version": __version__,
        "skeleton": _skeleton_payload(checkpoint.skeleton),
        "frame_time": checkpoint.skeleton.frame_time,
        "r": r,
        "conditional": checkpoint.conditional,
        "coarse_length": checkpoint.level_lengths[0][0],
    }


def _constraint_rows(checkpoint, frames):
    """constraints message frames -> [L, F0] array (masked channels set)."""
    sk = checkpoint.skeleton
    rows = np.zeros((len(frames), checkpoint.n_features))
    rot = rotation_channel_slice(0)
    disp = displacement_slice(sk.n_joints)
    for i, frame in enumerate(frames):
        pos = frame["root_pos"]
        six = frame["root_rot6d"]
        if len(pos) != 3 or len(six) != 6:
            raise KeyError("root_pos must have 3 entries and root_rot6d 6")
        rows[i, disp] = pos
        rows[i, rot] = six
    return rows


def _poses(checkpoint, frames):
    sk = checkpoint.skeleton
    j = sk.n_joints
    motion = Motion(frames, j, sk.n_contacts)
    out = []
    for t in range(motion.n_frames):
        out.append(
            {
                "rot6d": motion.rotations[t].reshape(j * 6).tolist(),
                "root_pos": motion.root_disp[t].tolist(),
                "contacts": motion.contacts[t].tolist(),
            }
        )
    return out


def create_app(checkpoint_path):
    checkpoint = Checkpoint.load(checkpoint_path)
    app = FastAPI(title="monomotion session server")

    @app.get("/info")
    def info():
        return _hello(checkpoint)

    @app.post("/keyframe")
    def keyframe(body: dict):
        coarse = checkpoint.coarse_levels[0].copy()
        for edit in body.get("edits", []):
            t = int(edit["index"])
            if not 0 <= t < coarse.shape[0]:
                return {"type": "error", "code": "bad_index", "detail": f"frame {t}"}
            sk = checkpoint.skeleton
            coarse[t, : sk.n_joints * 6] = np.asarray(edit["rot6d"], dtype=float)
            if "root_pos" in edit:
                coarse[t, displacement_slice(sk.n_joints)] = edit["root_pos"]
        motion = keyframe_edit(
            checkpoint,
            Motion(coarse, checkpoint.skeleton.n_joints, checkpoint.skeleton.n_contacts),
            deterministic=bool(body.get("deterministic", True)),
            seed=int(body.get("seed", 0)),
        )
        return {"type": "frames", "start_index": 0, "poses": _poses(checkpoint, motion.data)}

    @app.websocket("/session")
    async def session_socket(ws: WebSocket):
        await ws.accept()
        await ws.send_json(_hello(checkpoint))
        session = None
        try:
            while True:
                try:
                    message = await ws.receive_json()
                except WebSocketDisconnect:
                    return
                except Exception:
                    await ws.send_json(
                        {"type": "error", "code": "bad_message", "detail": "not a JSON object"}
                    )
                    continue
                kind = message.get("type")
                if kind == "bye":
                    await ws.send_json({"type": "bye"})
                    await ws.close()
                    return
                if kind != "constraints":
                    await ws.send_json(
                        {"type": "error", "code": "bad_type", "detail": f"unknown type {kind!r}"}
                    )
                    continue
                try:
                    rows = _constraint_rows(checkpoint, message["frames"])
                except (KeyError, TypeError, IndexError) as exc:
                    await ws.send_json(
                        {"type": "error", "code": "bad_constraints", "detail": str(exc)}
                    )
                    await ws.close()
                    return
                try:
                    if session is None:
                        if not checkpoint.conditional:
                            await ws.send_json(
                                {
                                    "type": "error",
                                    "code": "not_conditional",
                                    "detail": "checkpoint has no constraint channels",
                                }
                            )
                            await ws.close()
                            return
                        session = InteractiveSession(
                            checkpoint, seed=int(message.get("seed", 0))
                        )
                    start, frames = session.extend(rows)
                except ValueError as exc:
                    await ws.send_json(
                        {"type": "error", "code": "bad_extension", "detail": str(exc)}
                    )
                    continue
                await ws.send_json(
                    {
                        "type": "frames",
                        "start_index": int(start),
                        "poses": _poses(checkpoint, frames)
                        if len(frames)
                        else [],
                    }
                )
        except WebSocketDisconnect:
            return

    return app
