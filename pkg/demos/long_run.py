"""Full-scale training schedule: 7 levels, 15000 iterations per level.

This is the configuration behind the long-run quality target (coverage
of at least 90% of the training clip with nonzero diversity); expect
multiple hours on one CPU core.  The scaled-down demos and the test
suite's smoke gate exercise the same code path in under a minute.
"""

import sys

from monomotion import TrainConfig, generate, load_bvh, save_bvh, train
from monomotion.metrics import evaluate_model
from _toy import toy_clip, toy_skeleton

if len(sys.argv) > 1:
    skeleton, motion = load_bvh(sys.argv[1])
    learning_rate = 1e-4  # conservative for real skeletons; 1e-3 suits tiny toys
    print(f"training on {sys.argv[1]}: {motion.n_frames} frames")
else:
    skeleton = toy_skeleton()
    motion = toy_clip(skeleton, n_frames=300)
    learning_rate = 1e-3
    print("training on the built-in toy clip (pass a BVH path to use real data)")

config = TrainConfig(n_levels=7, iterations_per_level=15000, learning_rate=learning_rate, seed=0)


def progress(record):
    if record["iteration"] % 500 == 0:
        print(record)


checkpoint = train(config, skeleton, [motion], progress=progress)
checkpoint.save("full_scale.ckpt")

report = evaluate_model(checkpoint, motion, n_samples=16, length=2 * motion.n_frames, seed=1)
print(f"coverage {report.coverage:.3f}  global diversity {report.pnn_cost:.3f}  "
      f"local diversity {report.local_diversity:.3f}")
save_bvh("full_scale_sample.bvh", skeleton, generate(checkpoint, 600, seed=2))
