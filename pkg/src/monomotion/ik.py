"""Foot-contact cleanup by damped-least-squares inverse kinematics.

Contact channels are binarized at 0.5; for every maximal contact run
the foot joint is pinned to its run-mean position by adjusting the
rotations of its ancestor chain, and the correction is eased in and out
over a few frames on each side of the run.  Root displacement, contact
channels, and joints outside the touched chains are left untouched.
"""

from __future__ import annotations

import warnings

import numpy as np

from .motion import (
    forward_kinematics,
    joint_speeds,
    matrix_to_rot6d,
    rot6d_to_matrix,
    rotation_channel_slice,
)

MAX_ITERATIONS = 20
DAMPING = 0.01
BLEND_FRAMES = 5
CHAIN_DEPTH = 3  # rotating ancestors per foot


def _contact_runs(labels):
    """Maximal runs of 1s as (start, end) pairs, end exclusive."""
    runs = []
    start = None
    for t, on in enumerate(labels):
        if on and start is None:
            start = t
        elif not on and start is not None:
            runs.append((start, t))
            start = None
    if start is not None:
        runs.append((start, len(labels)))
    return runs


def _axis_angle_matrix(axis, angle):
    x, y, z = axis
    c, s = np.cos(angle), np.sin(angle)
    cc = 1.0 - c
    return np.array(
        [
            [c + x * x * cc, x * y * cc - z * s, x * z * cc + y * s],
            [y * x * cc + z * s, c + y * y * cc, y * z * cc - x * s],
            [z * x * cc - y * s, z * y * cc + x * s, c + z * z * cc],
        ]
    )


def _rotvec_matrix(w):
    angle = np.linalg.norm(w)
    if angle < 1e-14:
        return np.eye(3)
    return _axis_angle_matrix(w / angle, angle)


def _fk_single(skeleton, locals_, root_pos):
    glob = np.empty_like(locals_)
    pos = np.empty((skeleton.n_joints, 3))
    glob[0] = locals_[0]
    pos[0] = root_pos
    for j in range(1, skeleton.n_joints):
        p = skeleton.parents[j]
        glob[j] = glob[p] @ locals_[j]
        pos[j] = pos[p] + glob[p] @ skeleton.offsets[j]
    return glob, pos


def _chain_reach(skeleton, chain, feet):
    """Total bone length a chain group can cover, for step clamping."""
    reach = 0.0
    for foot in feet:
        j = foot
        while j >= 0 and j not in chain:
            reach += float(np.linalg.norm(skeleton.offsets[j]))
            j = skeleton.parents[j]
    for j in chain:
        reach += float(np.linalg.norm(skeleton.offsets[j]))
    return max(reach, 1e-6)


def _solve_frame(skeleton, locals_, root_pos, feet, chain, targets):
    """Damped least squares pinning several end effectors at once.

    ``feet`` and ``targets`` are parallel lists; ``chain`` holds the
    rotating joints.  Solving all feet of one leg group together lets
    geometrically incompatible anchors settle into a stable compromise
    instead of oscillating between per-foot solves.  Per-iteration error
    steps are clamped and the best configuration seen is kept, so the
    result is never farther from the targets than the input pose.
    Edits ``locals_`` in place.
    """
    n = len(feet)
    clamp = 0.3 * _chain_reach(skeleton, chain, feet)
    best_norm = np.inf
    best = None
    for it in range(MAX_ITERATIONS + 1):
        glob, pos = _fk_single(skeleton, locals_, root_pos)
        err = np.concatenate([targets[i] - pos[feet[i]] for i in range(n)])
        norm = float(np.linalg.norm(err))
        if norm < best_norm:
            best_norm = norm
            best = {j: locals_[j].copy() for j in chain}
        if norm < 1e-9 or it == MAX_ITERATIONS:
            break
        if norm > clamp:
            err = err * (clamp / norm)
        jac = np.zeros((3 * n, 3 * len(chain)))
        for i, foot in enumerate(feet):
            for c, j in enumerate(chain):
                if not _is_ancestor(skeleton, j, foot):
                    continue
                lever = pos[foot] - pos[j]
                for a in range(3):
                    axis = np.zeros(3)
                    axis[a] = 1.0
                    jac[3 * i : 3 * i + 3, 3 * c + a] = np.cross(axis, lever)
        jtj = jac.T @ jac + (DAMPING**2) * np.eye(jac.shape[1])
        delta = np.linalg.solve(jtj, jac.T @ err)
        for c, j in enumerate(chain):
            rot = _rotvec_matrix(delta[3 * c : 3 * c + 3])
            new_glob = rot @ glob[j]
            parent_glob = glob[skeleton.parents[j]] if skeleton.parents[j] >= 0 else np.eye(3)
            locals_[j] = parent_glob.T @ new_glob
    for j in chain:
        locals_[j] = best[j]
    return locals_


def _is_ancestor(skeleton, j, foot):
    p = skeleton.parents[foot]
    while p >= 0:
        if p == j:
            return True
        p = skeleton.parents[p]
    return False


def _solve_chain(skeleton, foot):
    """Rotating joints for a foot: its nearest non-root ancestors.

    The root never rotates (it would drag the whole body and make
    simultaneously pinned legs fight); a foot needs at least two
    ancestors in total to qualify for solving at all.
    """
    ancestors = []
    j = skeleton.parents[foot]
    while j >= 0:
        ancestors.append(j)
        j = skeleton.parents[j]
    if len(ancestors) < 2:
        return []
    return [j for j in ancestors if j != 0][:CHAIN_DEPTH]


def foot_ik_cleanup(skeleton, motion):
    """Pin contact-labeled feet and return the corrected motion.

    Contact runs on joints without at least two ancestors are skipped
    with a warning.  Anchors are the run-mean foot positions of the
    input motion; feet whose chains share joints (heel and toe of one
    leg) are solved jointly per frame.  After cleanup the foot speed on
    contact frames is below the contact threshold.
    """
    labels = motion.contacts >= 0.5
    if not labels.any():
        return motion.copy()

    out = motion.copy()
    positions = forward_kinematics(skeleton, motion)
    rot_mats = rot6d_to_matrix(motion.rotations)  # [T, J, 3, 3]
    t_total = motion.n_frames

    # per frame and foot, keep the strongest pin: runs of one foot closer
    # than the blend width would otherwise pull it toward two anchors
    best = [dict() for _ in range(t_total)]
    for k, foot in enumerate(skeleton.foot_joints):
        chain = _solve_chain(skeleton, foot)
        if not chain:
            warnings.warn(
                f"foot joint {skeleton.names[foot]} has no ancestor chain to solve; skipped"
            )
            continue
        for start, end in _contact_runs(labels[:, k]):
            anchor = positions[start:end, foot].mean(axis=0)
            lo = max(0, start - BLEND_FRAMES)
            hi = min(t_total, end + BLEND_FRAMES)
            for t in range(lo, hi):
                if start <= t < end:
                    weight = 1.0
                elif t < start:
                    weight = (BLEND_FRAMES - (start - t) + 1) / (BLEND_FRAMES + 1)
                else:
                    weight = (BLEND_FRAMES - (t - end + 1) + 1) / (BLEND_FRAMES + 1)
                target = weight * anchor + (1.0 - weight) * positions[t, foot]
                if foot not in best[t] or weight > best[t][foot][0]:
                    best[t][foot] = (weight, chain, target)

    pins = [[] for _ in range(t_total)]
    touched = [set() for _ in range(t_total)]
    for t in range(t_total):
        for foot, (weight, chain, target) in sorted(best[t].items()):
            pins[t].append((foot, chain, target))
            touched[t].update(chain)

    # warm-start each solve from the previous frame's solved chain pose:
    # run-mean anchors of a rigid heel/toe pair can be slightly
    # inconsistent, and warm-starting makes consecutive frames settle
    # into the same least-squares compromise (low residual speed)
    warm = {}
    for t in range(t_total):
        if not pins[t]:
            warm = {}
            continue
        locals_t = rot_mats[t]
        next_warm = {}
        for feet, chain, targets in _grouped(pins[t]):
            # keyed by the rotating joints, so warmth survives a heel or
            # toe run ending while the rest of the leg stays pinned
            key = frozenset(chain)
            prior = warm.get(key) or next(
                (w for k, w in warm.items() if k & key), None
            )
            if prior:
                for j, local in prior.items():
                    if j in chain:
                        locals_t[j] = local
            _solve_frame(skeleton, locals_t, motion.root_disp[t], feet, chain, targets)
            next_warm[key] = {j: locals_t[j].copy() for j in chain}
        warm = next_warm
        for j in touched[t]:
            out.data[t, rotation_channel_slice(j)] = matrix_to_rot6d(locals_t[j])
    return out


def _grouped(frame_pins):
    """Merge pins whose chains share joints into joint solve groups."""
    groups = []  # (feet, chain joints in order, targets)
    for foot, chain, target in frame_pins:
        merged = None
        for group in groups:
            if set(chain) & set(group[1]):
                merged = group
                break
        if merged is None:
            groups.append(([foot], list(chain), [target]))
        else:
            merged[0].append(foot)
            merged[1].extend(j for j in chain if j not in merged[1])
            merged[2].append(target)
    return groups


def contact_frame_speeds(skeleton, motion):
    """Foot speeds on contact-labeled frames, for verifying cleanup."""
    pos = forward_kinematics(skeleton, motion)
    speeds = joint_speeds(pos)[:, skeleton.foot_joints]
    labels = motion.contacts >= 0.5
    return speeds[labels]
