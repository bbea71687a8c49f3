"""Steer a character along a live trajectory, frame-chunk by frame-chunk.

A conditional model follows root-channel constraints.  The session
releases frames as soon as no future constraint can change them (all
but the trailing half receptive field), so the displayed stream is
final: extending the trajectory later never rewrites shown frames.

The same protocol runs over websockets for browser clients:

    monomotion serve --checkpoint conditional.ckpt --port 8765

(see frontend/ for the browser studio).
"""

import numpy as np

from monomotion import InteractiveSession, TrainConfig, train, train_conditional
from monomotion.motion import identity_rot6d
from _toy import toy_clip, toy_skeleton

skeleton = toy_skeleton()
motion = toy_clip(skeleton)

base_config = TrainConfig(iterations_per_level=200, n_levels=4, learning_rate=1e-3, seed=0)
base = train(base_config, skeleton, [motion])
cond_config = TrainConfig(
    iterations_per_level=200, n_levels=4, learning_rate=1e-3, seed=0,
    constrained_joints=["root"],
)
conditional = train_conditional(cond_config, skeleton, motion, base)
print(f"halved receptive field r = {conditional.receptive_field()[1]} frames")


def trajectory(start, n, heading=0.0, step=0.03):
    """Straight root track: position + yaw as constraint rows."""
    rows = np.zeros((n, skeleton.n_features))
    c, s = np.cos(heading), np.sin(heading)
    rows[:, 0:6] = [c, 0.0, s, 0.0, 1.0, 0.0]
    for i in range(n):
        rows[i, 12:15] = [start[0] + step * i * s, 1.0, start[2] + step * i * c]
    return rows


session = InteractiveSession(conditional, seed=4)
shown = 0
# walk straight, then veer right, then right again: three "joystick" chunks
chunks = [
    trajectory((0.0, 1.0, 0.0), 200),
    trajectory((0.0, 1.0, 6.0), 90, heading=0.5),
    trajectory((2.8, 1.0, 8.4), 90, heading=1.0),
]
for chunk in chunks:
    start, frames = session.extend(chunk)
    shown += len(frames)
    print(f"constraints +{len(chunk):3d} -> displayed frames {start}..{start + len(frames) - 1} "
          f"({session.total_frames - shown} withheld)")
print(f"total displayed {shown} of {session.total_frames} constrained frames")
