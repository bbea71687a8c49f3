"""BVH text import/export.

Parsing converts Euler channels (any of the six orders) to rotation
matrices and on to 6-D features; writing inverts the chain.  Numeric
output uses six decimal places so identical motions serialize to
identical bytes.  Contact channels are not part of BVH; they are
re-extracted from FK speeds on load.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.spatial.transform import Rotation

from .motion import (
    Motion,
    Skeleton,
    attach_contacts,
    matrix_to_rot6d,
    rot6d_to_matrix,
)


class BvhError(ValueError):
    pass


_AXIS_OF = {"Xrotation": "X", "Yrotation": "Y", "Zrotation": "Z"}
_POSITION_CHANNELS = ("Xposition", "Yposition", "Zposition")


def _euler_to_matrix(order, degrees_xyz):
    # BVH applies channels left to right as nested local rotations,
    # which is scipy's intrinsic (uppercase) convention.
    return Rotation.from_euler(order, degrees_xyz, degrees=True).as_matrix()


def _matrix_to_euler(order, mat):
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="Gimbal lock")
        return Rotation.from_matrix(mat).as_euler(order, degrees=True)


def parse_bvh(text, eps_vel=None, foot_joints=None, foot_name_hints=None):
    """Parse BVH text into (Skeleton, Motion).

    ``foot_joints`` fixes the contact-carrying joints by index; when
    omitted, joint names containing one of ``foot_name_hints``
    (default: foot/toe/heel/ankle) are used, falling back to leaf
    joints of minimal rest height.
    """
    tokens = text.replace("\t", " ").split("\n")
    lines = [ln.strip() for ln in tokens if ln.strip()]
    if not lines or lines[0].upper() != "HIERARCHY":
        raise BvhError("missing HIERARCHY header")

    names, parents, offsets, orders, has_pos = [], [], [], [], []
    end_sites = {}
    channel_layout = []  # (joint, kind) per scalar column of the MOTION block
    stack = []
    i = 1
    current = None
    in_end_site = False
    while i < len(lines):
        line = lines[i]
        upper = line.upper()
        if upper.startswith("ROOT") or upper.startswith("JOINT"):
            name = line.split(None, 1)[1].strip()
            parent = stack[-1] if stack else -1
            if parent == -1 and names:
                raise BvhError("multiple roots are not supported")
            names.append(name)
            parents.append(parent)
            offsets.append([0.0, 0.0, 0.0])
            orders.append(None)
            has_pos.append(False)
            current = len(names) - 1
        elif upper.startswith("END SITE"):
            in_end_site = True
        elif upper.startswith("OFFSET"):
            vals = [float(v) for v in line.split()[1:4]]
            if in_end_site:
                end_sites[current] = vals
            else:
                offsets[current] = vals
        elif upper.startswith("CHANNELS"):
            parts = line.split()
            n = int(parts[1])
            chans = parts[2 : 2 + n]
            if len(chans) != n:
                raise BvhError(f"channel count mismatch on joint {names[current]}")
            rot = []
            pos = []
            for ch in chans:
                if ch in _AXIS_OF:
                    rot.append(_AXIS_OF[ch])
                    channel_layout.append((current, ch))
                elif ch in _POSITION_CHANNELS:
                    pos.append(ch)
                    channel_layout.append((current, ch))
                else:
                    raise BvhError(f"unsupported channel token {ch!r}")
            if len(rot) != 3:
                raise BvhError(f"joint {names[current]} must have three rotation channels")
            if pos and pos != list(_POSITION_CHANNELS):
                raise BvhError(f"position channels on {names[current]} must be X, Y, Z")
            orders[current] = "".join(rot)
            has_pos[current] = bool(pos)
        elif line == "{":
            if not in_end_site:
                stack.append(current)
        elif line == "}":
            if in_end_site:
                in_end_site = False
            else:
                stack.pop()
                current = stack[-1] if stack else None
        elif upper.startswith("MOTION"):
            i += 1
            break
        else:
            raise BvhError(f"unexpected line in hierarchy: {line!r}")
        i += 1
    else:
        raise BvhError("missing MOTION section")

    if not names:
        raise BvhError("no joints declared")
    if not has_pos[0]:
        raise BvhError("root must carry position channels")

    if not lines[i].upper().startswith("FRAMES"):
        raise BvhError("missing Frames: line")
    n_frames = int(lines[i].split(":")[1])
    i += 1
    if not lines[i].upper().startswith("FRAME TIME"):
        raise BvhError("missing Frame Time: line")
    frame_time = float(lines[i].split(":")[1])
    i += 1

    values = []
    for ln in lines[i:]:
        values.extend(float(v) for v in ln.split())
    width = len(channel_layout)
    if len(values) != n_frames * width:
        raise BvhError(
            f"expected {n_frames * width} motion values, found {len(values)}"
        )
    table = np.asarray(values, dtype=np.float64).reshape(n_frames, width)

    n_joints = len(names)
    euler = np.zeros((n_frames, n_joints, 3))
    root_pos = np.zeros((n_frames, 3))
    rot_cursor = {j: 0 for j in range(n_joints)}
    for col, (j, ch) in enumerate(channel_layout):
        if ch in _AXIS_OF:
            euler[:, j, rot_cursor[j]] = table[:, col]
            rot_cursor[j] += 1
        elif j == 0:
            root_pos[:, _POSITION_CHANNELS.index(ch)] = table[:, col]
        # position channels on non-root joints are parsed and dropped

    skeleton = Skeleton(
        names=names,
        parents=parents,
        offsets=np.asarray(offsets),
        foot_joints=[],
        frame_time=frame_time,
        rotation_orders=orders,
        has_position_channels=has_pos,
        end_sites=end_sites,
    )
    if foot_joints is None:
        foot_joints = _guess_foot_joints(skeleton, foot_name_hints)
    skeleton.foot_joints = list(foot_joints)

    rot6d = np.empty((n_frames, n_joints, 6))
    for j in range(n_joints):
        mats = _euler_to_matrix(orders[j], euler[:, j, :])
        rot6d[:, j, :] = matrix_to_rot6d(mats)

    feats = np.concatenate(
        [
            rot6d.reshape(n_frames, n_joints * 6),
            root_pos,
            np.zeros((n_frames, len(skeleton.foot_joints))),
        ],
        axis=1,
    )
    motion = Motion(feats, n_joints, len(skeleton.foot_joints))
    if skeleton.foot_joints and n_frames >= 2:
        motion = attach_contacts(skeleton, motion, eps_vel)
    return skeleton, motion


def _guess_foot_joints(skeleton, hints):
    hints = tuple(h.lower() for h in (hints or ("foot", "toe", "heel", "ankle")))
    by_name = [
        j for j, name in enumerate(skeleton.names) if any(h in name.lower() for h in hints)
    ]
    if by_name:
        return by_name
    leaves = [j for j in range(skeleton.n_joints) if not skeleton.children(j)]
    if not leaves:
        return []
    from .motion import rest_positions

    heights = rest_positions(skeleton)[:, 1]
    floor = min(heights[j] for j in leaves)
    span = max(heights.max() - heights.min(), 1e-9)
    return [j for j in leaves if heights[j] - floor < 0.1 * span]


def write_bvh(skeleton, motion):
    """Serialize (Skeleton, Motion) back to BVH text."""
    if motion.n_joints != skeleton.n_joints:
        raise BvhError("motion does not match skeleton")
    fmt = lambda x: f"{x:.6f}"
    out = ["HIERARCHY"]

    def emit(j, depth):
        pad = "  " * depth
        tag = "ROOT" if j == 0 else "JOINT"
        out.append(f"{pad}{tag} {skeleton.names[j]}")
        out.append(f"{pad}{{")
        inner = "  " * (depth + 1)
        off = skeleton.offsets[j]
        out.append(f"{inner}OFFSET {fmt(off[0])} {fmt(off[1])} {fmt(off[2])}")
        rot_chans = " ".join(
            {"X": "Xrotation", "Y": "Yrotation", "Z": "Zrotation"}[a]
            for a in skeleton.rotation_orders[j]
        )
        if skeleton.has_position_channels[j] or j == 0:
            out.append(f"{inner}CHANNELS 6 Xposition Yposition Zposition {rot_chans}")
        else:
            out.append(f"{inner}CHANNELS 3 {rot_chans}")
        kids = skeleton.children(j)
        if kids:
            for c in kids:
                emit(c, depth + 1)
        else:
            site = skeleton.end_sites.get(j, [0.0, 0.0, 0.0])
            out.append(f"{inner}End Site")
            out.append(f"{inner}{{")
            out.append(
                f"{inner}  OFFSET {fmt(site[0])} {fmt(site[1])} {fmt(site[2])}"
            )
            out.append(f"{inner}}}")
        out.append(f"{pad}}}")

    emit(0, 0)
    out.append("MOTION")
    out.append(f"Frames: {motion.n_frames}")
    out.append(f"Frame Time: {fmt(skeleton.frame_time)}")

    mats = rot6d_to_matrix(motion.rotations)  # [T, J, 3, 3]
    eulers = np.empty((motion.n_frames, skeleton.n_joints, 3))
    for j in range(skeleton.n_joints):
        eulers[:, j, :] = _matrix_to_euler(skeleton.rotation_orders[j], mats[:, j])

    root = motion.root_disp
    for t in range(motion.n_frames):
        row = []
        for j in range(skeleton.n_joints):
            if skeleton.has_position_channels[j] or j == 0:
                pos = root[t] if j == 0 else np.zeros(3)
                row.extend(fmt(v) for v in pos)
            row.extend(fmt(v) for v in eulers[t, j])
        out.append(" ".join(row))
    return "\n".join(out) + "\n"


def load_bvh(path, eps_vel=None, foot_joints=None):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_bvh(fh.read(), eps_vel=eps_vel, foot_joints=foot_joints)


def save_bvh(path, skeleton, motion):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_bvh(skeleton, motion))
