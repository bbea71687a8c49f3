"""monomotion: motion synthesis from a single animation clip.

Train a hierarchy of per-frame-rate generators on one BVH sequence,
then synthesize novel motion of arbitrary length, steer it with root
trajectories, transfer its style, edit its key frames, and score the
results with single-sequence coverage and diversity metrics.
"""

__version__ = "0.1.0"

from .bvh import load_bvh, parse_bvh, save_bvh, write_bvh
from .checkpoint import Checkpoint
from .config import TrainConfig
from .graph import MotionGraph, build_motion_graph, support_mask
from .ik import foot_ik_cleanup
from .losses import adversarial_losses, contact_consistency_loss
from .metrics import MetricsReport, evaluate_model, evaluate_samples
from .motion import (
    Motion,
    Pyramid,
    Skeleton,
    build_pyramid,
    contact_labels,
    forward_kinematics,
    resample,
    rot6d_to_matrix,
)
from .synthesis import (
    InteractiveSession,
    generate,
    generate_conditional,
    keyframe_edit,
    style_transfer,
)
from .training import TrainingDiverged, train, train_conditional

__all__ = [
    "Checkpoint",
    "InteractiveSession",
    "MetricsReport",
    "Motion",
    "MotionGraph",
    "Pyramid",
    "Skeleton",
    "TrainConfig",
    "TrainingDiverged",
    "adversarial_losses",
    "build_motion_graph",
    "build_pyramid",
    "contact_consistency_loss",
    "contact_labels",
    "evaluate_model",
    "evaluate_samples",
    "foot_ik_cleanup",
    "forward_kinematics",
    "generate",
    "generate_conditional",
    "keyframe_edit",
    "load_bvh",
    "parse_bvh",
    "resample",
    "rot6d_to_matrix",
    "save_bvh",
    "style_transfer",
    "support_mask",
    "train",
    "train_conditional",
    "write_bvh",
]
