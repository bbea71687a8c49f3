"""Score generated motion against the training clip.

Coverage asks how much of the clip the model can reproduce; global
diversity (patched nearest neighbors) and local diversity ask how far
the model strays from verbatim copying.
"""

from monomotion import TrainConfig, train
from monomotion.metrics import evaluate_model, evaluate_samples
from _toy import toy_clip, toy_skeleton

skeleton = toy_skeleton()
motion = toy_clip(skeleton)
config = TrainConfig(iterations_per_level=500, n_levels=4, learning_rate=1e-3, seed=0)
checkpoint = train(config, skeleton, [motion])

# sanity anchor: the clip evaluated against itself sits at the fixed
# points -- full coverage, zero PNN cost, zero local diversity
self_report = evaluate_samples([motion], motion)
print("self-evaluation:", self_report.coverage, self_report.pnn_cost, self_report.local_diversity)

# expectation over freshly generated samples (seeded, reported per sample)
report = evaluate_model(checkpoint, motion, n_samples=8, length=2 * motion.n_frames, seed=5)
print(f"coverage        {report.coverage:.3f}  (per sample {report.coverage_per_sample})")
print(f"global diversity {report.pnn_cost:.3f}")
print(f"local diversity  {report.local_diversity:.3f}")
print(f"thresholds: eps={report.epsilon}, L_c={report.coverage_window}, "
      f"T_min={report.pnn_min_segment}, L_d={report.diversity_window}")

with open("metrics_report.json", "w") as fh:
    fh.write(report.to_json())
print("wrote metrics_report.json")
