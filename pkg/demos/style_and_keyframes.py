"""Hierarchical control: style transfer and coarse key-frame editing.

The coarsest level carries the clip's global structure, the upper
levels its fine detail.  Replacing the coarse level with other content
transfers the trained detail onto it; editing coarse poses re-renders
the clip with smooth, learned transitions.
"""

import numpy as np

from monomotion import Motion, TrainConfig, keyframe_edit, save_bvh, style_transfer, train
from monomotion.motion import identity_rot6d
from _toy import toy_clip, toy_skeleton

skeleton = toy_skeleton()
style_clip = toy_clip(skeleton, swing=0.6, period=16)  # brisk, springy gait
config = TrainConfig(iterations_per_level=500, n_levels=4, learning_rate=1e-3, seed=0)
checkpoint = train(config, skeleton, [style_clip])

# --- style transfer: slow ambling content, brisk style ---------------------
content = toy_clip(skeleton, n_frames=200, swing=0.15, period=40)
styled = style_transfer(checkpoint, skeleton, content, seed=3)
save_bvh("styled.bvh", skeleton, styled)
print(f"styled.bvh: {styled.n_frames} frames (content length preserved)")

# --- key-frame editing at the coarsest level --------------------------------
coarse = Motion(checkpoint.coarse_levels[0].copy(), skeleton.n_joints, skeleton.n_contacts)
edited = coarse.copy()
mid = coarse.n_frames // 2
edited.data[mid, 6:12] = identity_rot6d()  # straighten the leg at one key frame

untouched = keyframe_edit(checkpoint, coarse, deterministic=True)
reposed = keyframe_edit(checkpoint, edited, deterministic=True)
changed = np.where(np.any(untouched.data != reposed.data, axis=1))[0]
print(f"one coarse pose edit changes fine frames {changed.min()}..{changed.max()} "
      f"of {reposed.n_frames} (the edit's receptive field)")
save_bvh("keyframe_edited.bvh", skeleton, reposed)
print("wrote keyframe_edited.bvh")
