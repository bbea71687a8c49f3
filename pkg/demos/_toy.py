"""Shared toy data for the demo scripts: a two-joint walker.

Real use feeds BVH files (Mixamo/Truebones style) through
``monomotion.load_bvh``; the toy keeps the demos self-contained and
fast on a laptop.
"""

import numpy as np
from scipy.spatial.transform import Rotation as R

from monomotion import Motion, Skeleton
from monomotion.motion import attach_contacts, identity_rot6d, matrix_to_rot6d


def toy_skeleton():
    return Skeleton(
        names=["hip", "foot"],
        parents=[-1, 0],
        offsets=np.array([[0.0, 0.0, 0.0], [0.0, -1.0, 0.0]]),
        foot_joints=[1],
        frame_time=1.0 / 30.0,
    )


def toy_clip(skeleton, n_frames=160, swing=0.5, speed=0.02, period=20):
    feats = np.zeros((n_frames, skeleton.n_features))
    for i in range(n_frames):
        feats[i, 0:6] = identity_rot6d()
        ang = swing * np.sin(2.0 * np.pi * i / period)
        feats[i, 6:12] = matrix_to_rot6d(R.from_euler("X", ang).as_matrix())
        feats[i, 12:15] = [0.0, 1.0, speed * i]
    return attach_contacts(skeleton, Motion(feats, 2, 1))
