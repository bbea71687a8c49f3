"""Shared builders: toy skeletons, synthetic clips, tiny checkpoints."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.spatial.transform import Rotation as R

from monomotion import Motion, Skeleton, TrainConfig, train, train_conditional
from monomotion.motion import attach_contacts, identity_rot6d, matrix_to_rot6d


def two_joint_skeleton():
    return Skeleton(
        names=["hip", "foot"],
        parents=[-1, 0],
        offsets=np.array([[0.0, 0.0, 0.0], [0.0, -1.0, 0.0]]),
        foot_joints=[1],
        frame_time=1.0 / 30.0,
    )


def sine_walk(skeleton, n_frames=160, swing=0.5, speed=0.02, period=20):
    """Two-joint walking toy: pendulum leg over a constant-velocity root."""
    feats = np.zeros((n_frames, skeleton.n_features))
    for i in range(n_frames):
        feats[i, 0:6] = identity_rot6d()
        ang = swing * np.sin(2.0 * np.pi * i / period)
        feats[i, 6:12] = matrix_to_rot6d(R.from_euler("X", ang).as_matrix())
        feats[i, 12:15] = [0.0, 1.0, speed * i]
    return attach_contacts(skeleton, Motion(feats, 2, 1))


def smooth_angles(n_frames, n_joints, seed, amplitude=30.0):
    """Deterministic band-limited Euler tracks in degrees, [T, J, 3]."""
    rng = np.random.default_rng(seed)
    t = np.arange(n_frames)[:, None, None]
    angles = np.zeros((n_frames, n_joints, 3))
    for harmonics in (17.0, 31.0, 53.0):
        phase = rng.uniform(0, 2 * np.pi, (1, n_joints, 3))
        weight = rng.uniform(0.2, 1.0, (1, n_joints, 3))
        angles = angles + weight * np.sin(2 * np.pi * t / harmonics + phase)
    return amplitude * angles / 3.0


def make_bvh_text(names, parents, offsets, orders, n_frames=60, seed=0, root_step=0.05):
    """Deterministic synthetic BVH text for an arbitrary topology."""
    n = len(names)
    children = {j: [c for c in range(n) if parents[c] == j] for j in range(n)}
    lines = ["HIERARCHY"]

    def emit(j, depth):
        pad = "  " * depth
        lines.append(f"{pad}{'ROOT' if j == 0 else 'JOINT'} {names[j]}")
        lines.append(f"{pad}{{")
        inner = "  " * (depth + 1)
        ox, oy, oz = offsets[j]
        lines.append(f"{inner}OFFSET {ox:.6f} {oy:.6f} {oz:.6f}")
        rot = " ".join(f"{a}rotation" for a in orders[j])
        if j == 0:
            lines.append(f"{inner}CHANNELS 6 Xposition Yposition Zposition {rot}")
        else:
            lines.append(f"{inner}CHANNELS 3 {rot}")
        if children[j]:
            for c in children[j]:
                emit(c, depth + 1)
        else:
            lines.append(f"{inner}End Site")
            lines.append(f"{inner}{{")
            lines.append(f"{inner}  OFFSET 0.000000 0.100000 0.000000")
            lines.append(f"{inner}}}")
        lines.append(f"{pad}}}")

    emit(0, 0)
    lines.append("MOTION")
    lines.append(f"Frames: {n_frames}")
    lines.append("Frame Time: 0.033333")
    angles = smooth_angles(n_frames, n, seed)
    for t in range(n_frames):
        row = [f"{0.02 * t:.6f}", "1.000000", f"{root_step * t:.6f}"]
        for j in range(n):
            row.extend(f"{v:.6f}" for v in angles[t, j])
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def humanoid_bvh(n_frames=60, seed=1):
    names = [
        "Hips", "Spine", "Chest", "Neck", "Head",
        "LeftUpLeg", "LeftLeg", "LeftFoot", "LeftToe",
        "RightUpLeg", "RightLeg", "RightFoot", "RightToe",
        "LeftArm", "RightArm",
    ]
    parents = [-1, 0, 1, 2, 3, 0, 5, 6, 7, 0, 9, 10, 11, 2, 2]
    offsets = [
        [0, 0, 0], [0, 0.2, 0], [0, 0.25, 0], [0, 0.2, 0], [0, 0.15, 0],
        [0.12, -0.05, 0], [0, -0.45, 0], [0, -0.45, 0], [0, -0.05, 0.15],
        [-0.12, -0.05, 0], [0, -0.45, 0], [0, -0.45, 0], [0, -0.05, 0.15],
        [0.2, 0.15, 0], [-0.2, 0.15, 0],
    ]
    orders = ["ZXY", "ZXY", "ZXY", "XYZ", "XYZ", "ZXY", "ZXY", "YZX", "ZXY",
              "ZXY", "ZXY", "YZX", "ZXY", "XZY", "XZY"]
    return make_bvh_text(names, parents, offsets, orders, n_frames, seed)


def quadruped_bvh(n_frames=60, seed=2):
    names = ["Body", "Neck", "Head",
             "FrontLeftLeg", "FrontLeftFoot", "FrontRightLeg", "FrontRightFoot",
             "BackLeftLeg", "BackLeftFoot", "BackRightLeg", "BackRightFoot",
             "Tail"]
    parents = [-1, 0, 1, 0, 3, 0, 5, 0, 7, 0, 9, 0]
    offsets = [
        [0, 0, 0], [0, 0.1, 0.3], [0, 0.1, 0.15],
        [0.15, -0.1, 0.25], [0, -0.4, 0], [-0.15, -0.1, 0.25], [0, -0.4, 0],
        [0.15, -0.1, -0.25], [0, -0.4, 0], [-0.15, -0.1, -0.25], [0, -0.4, 0],
        [0, 0.05, -0.35],
    ]
    orders = ["ZXY"] * 12
    return make_bvh_text(names, parents, offsets, orders, n_frames, seed)


def hexapod_bvh(n_frames=60, seed=3):
    names = ["Thorax"]
    parents = [-1]
    offsets = [[0.0, 0.0, 0.0]]
    for i, (x, z) in enumerate([(0.2, 0.2), (-0.2, 0.2), (0.25, 0.0),
                                (-0.25, 0.0), (0.2, -0.2), (-0.2, -0.2)]):
        hip = len(names)
        names.extend([f"Leg{i}Hip", f"Leg{i}Foot"])
        parents.extend([0, hip])
        offsets.extend([[x, -0.05, z], [np.sign(x) * 0.15, -0.25, 0.0]])
    orders = ["XYZ"] * len(names)
    return make_bvh_text(names, parents, offsets, orders, n_frames, seed)


@pytest.fixture(scope="session")
def toy_setup():
    sk = two_joint_skeleton()
    return sk, sine_walk(sk)


@pytest.fixture(scope="session")
def tiny_checkpoint(toy_setup):
    """0-iteration unconditional checkpoint (random nets, full geometry)."""
    sk, motion = toy_setup
    cfg = TrainConfig(iterations_per_level=0, n_levels=4, seed=11)
    return train(cfg, sk, [motion])


@pytest.fixture(scope="session")
def tiny_conditional(toy_setup, tiny_checkpoint):
    sk, motion = toy_setup
    cfg = TrainConfig(
        iterations_per_level=0, n_levels=4, seed=11, constrained_joints=["root"]
    )
    return train_conditional(cfg, sk, motion, tiny_checkpoint)


def straight_constraints(skeleton, n_frames, step=0.03):
    c = np.zeros((n_frames, skeleton.n_features))
    c[:, 0:6] = identity_rot6d()
    c[:, skeleton.n_joints * 6 : skeleton.n_joints * 6 + 3] = np.stack(
        [np.zeros(n_frames), np.ones(n_frames), step * np.arange(n_frames)], axis=1
    )
    return c
