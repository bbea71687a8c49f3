"""Train on a single clip, then synthesize novel motion of any length.

Runs in about a minute on one CPU core.  Swap the toy clip for your own
data with ``skeleton, motion = monomotion.load_bvh("clip.bvh")``.
"""

import numpy as np

from monomotion import TrainConfig, generate, save_bvh, train
from _toy import toy_clip, toy_skeleton

skeleton = toy_skeleton()
motion = toy_clip(skeleton)
print(f"training clip: {motion.n_frames} frames, {skeleton.n_joints} joints")

# a scaled-down schedule; the full-scale setup is 7 levels and
# 15000 iterations per level (see long_run.py)
config = TrainConfig(
    iterations_per_level=500,
    n_levels=4,
    learning_rate=1e-3,
    seed=0,
)

telemetry = []
checkpoint = train(config, skeleton, [motion], progress=telemetry.append)
print(f"trained {checkpoint.n_levels} levels, pyramid {checkpoint.level_lengths[0]}")
print(f"reconstruction error: {checkpoint.recon_errors[0]:.4f}")

# the anchor noises reproduce the training clip
reconstruction = generate(checkpoint, motion.n_frames, use_zstar=True)
err = np.mean(np.abs(reconstruction.data - motion.data))
print(f"anchor reconstruction mean |error|: {err:.4f}")

# novel motion, twice the training length; every seed is a new variation
for seed in (1, 2):
    novel = generate(checkpoint, 2 * motion.n_frames, seed=seed)
    path = f"novel_seed{seed}.bvh"
    save_bvh(path, skeleton, novel)
    print(f"wrote {path} ({novel.n_frames} frames)")

checkpoint.save("toy.ckpt")
print("wrote toy.ckpt")
