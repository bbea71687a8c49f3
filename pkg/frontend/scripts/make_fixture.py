"""Build a small conditional checkpoint for the frontend tests."""

import sys

import numpy as np
from scipy.spatial.transform import Rotation as R

from monomotion import Motion, Skeleton, TrainConfig, train, train_conditional
from monomotion.motion import attach_contacts, identity_rot6d, matrix_to_rot6d


def main(out_path):
    skeleton = Skeleton(
        names=["hip", "foot"],
        parents=[-1, 0],
        offsets=np.array([[0.0, 0.0, 0.0], [0.0, -1.0, 0.0]]),
        foot_joints=[1],
        frame_time=1.0 / 30.0,
    )
    n = 160
    feats = np.zeros((n, skeleton.n_features))
    for i in range(n):
        feats[i, 0:6] = identity_rot6d()
        ang = 0.5 * np.sin(2.0 * np.pi * i / 20)
        feats[i, 6:12] = matrix_to_rot6d(R.from_euler("X", ang).as_matrix())
        feats[i, 12:15] = [0.0, 1.0, 0.02 * i]
    motion = attach_contacts(skeleton, Motion(feats, 2, 1))

    base_cfg = TrainConfig(iterations_per_level=0, n_levels=3, seed=2)
    base = train(base_cfg, skeleton, [motion])
    cond_cfg = TrainConfig(
        iterations_per_level=0, n_levels=3, seed=2, constrained_joints=["root"]
    )
    conditional = train_conditional(cond_cfg, skeleton, motion, base)
    conditional.save(out_path)
    print(f"wrote {out_path} (r = {conditional.receptive_field()[1]})")


if __name__ == "__main__":
    main(sys.argv[1])
