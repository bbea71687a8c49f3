"""Single-sequence evaluation: coverage, patched nearest neighbors, diversity.

All distances operate on per-frame, per-joint rotation matrices (squared
Frobenius), never on positions or the displacement/contact channels:
local variation accumulates along kinematic chains, which would inflate
position-based distances on visually similar patches.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .motion import rot6d_to_matrix

COVERAGE_WINDOW = 30  # frames, one second at 30 fps
PNN_MIN_SEGMENT = 30
DIVERSITY_WINDOW = 15
DEFAULT_SAMPLES = 16


def rotation_features(motion):
    """Flattened rotation matrices [T, 9*J] of a motion."""
    mats = rot6d_to_matrix(motion.rotations)
    t = mats.shape[0]
    return mats.reshape(t, -1)


def frame_distances(x1, x2):
    """Pairwise squared Frobenius distances between frame feature rows.

    Exactly zero wherever the rows are bitwise identical, so identity
    comparisons are exact fixed points.
    """
    sq1 = np.einsum("ij,ij->i", x1, x1)
    sq2 = np.einsum("ij,ij->i", x2, x2)
    d = np.maximum(sq1[:, None] + sq2[None, :] - 2.0 * (x1 @ x2.T), 0.0)
    near = np.argwhere(d < 1e-9)
    if near.size:
        for i, j in near:
            if np.array_equal(x1[i], x2[j]):
                d[i, j] = 0.0
    return d


def _diag_prefix(d):
    """A[i+1, j+1] = d[i, j] + A[i, j]; window sums become two lookups."""
    lq, lt = d.shape
    a = np.zeros((lq + 1, lt + 1))
    for i in range(lq):
        a[i + 1, 1:] = d[i, :] + a[i, :-1]
    return a


def _window_scores(d, window):
    """W[i, k] = sum_m d[i+m, k+m] for all aligned windows of given length."""
    a = _diag_prefix(d)
    return a[window:, window:] - a[:-window, :-window]


def nn_distance(q1_feats, q2_feats):
    """Mean per-frame distance of q1 to its best aligned window in q2."""
    l1 = q1_feats.shape[0]
    if l1 > q2_feats.shape[0]:
        raise ValueError("first sequence must not be longer than the second")
    d = frame_distances(q1_feats, q2_feats)
    scores = _window_scores(d, l1)[0]
    return float(scores.min()) / l1


def coverage_of_sample(sample_feats, ref_feats, epsilon, window=COVERAGE_WINDOW):
    """Fraction of the reference's windows with a near neighbor in the sample."""
    lt = ref_feats.shape[0]
    if lt < window:
        raise ValueError(f"reference shorter than the coverage window ({window})")
    if sample_feats.shape[0] < window:
        raise ValueError(f"sample shorter than the coverage window ({window})")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    d = frame_distances(ref_feats, sample_feats)
    scores = _window_scores(d, window)  # [ref windows, sample windows]
    nn = scores.min(axis=1) / window
    return float(np.mean(nn < epsilon))


def coverage(samples_feats, ref_feats, epsilon, window=COVERAGE_WINDOW):
    """(mean coverage, per-sample coverages) over generated samples."""
    per_sample = [
        coverage_of_sample(s, ref_feats, epsilon, window) for s in samples_feats
    ]
    return float(np.mean(per_sample)), per_sample


def coverage_union(samples_feats, ref_feats, epsilon, window=COVERAGE_WINDOW):
    """Fraction of reference windows covered by at least one sample.

    Monotone nondecreasing in both epsilon and the sample count.
    """
    best = None
    for feats in samples_feats:
        d = frame_distances(ref_feats, feats)
        nn = _window_scores(d, window).min(axis=1) / window
        best = nn if best is None else np.minimum(best, nn)
    if best is None:
        raise ValueError("need at least one sample")
    return float(np.mean(best < epsilon))


def local_diversity(sample_feats, ref_feats, window=DIVERSITY_WINDOW):
    """Mean nearest-neighbor distance of the sample's short windows."""
    lq = sample_feats.shape[0]
    if lq < window:
        raise ValueError(f"sample shorter than the diversity window ({window})")
    d = frame_distances(sample_feats, ref_feats)
    scores = _window_scores(d, window)
    return float(np.mean(scores.min(axis=1) / window))


# ---------------------------------------------------------------------------
# patched nearest neighbors


def pnn_from_costs(d, t_min, return_stats=False):
    """Minimum average per-frame cost over segmentations, plus labels.

    ``d`` is the [L_Q, L_T] per-frame cost table.  Every segment matches
    a contiguous window of the reference and is at least ``t_min``
    frames long.  Solved by the prefix-sum dynamic program in
    O(L_Q^2 * L_T); labels come from the backtrace.
    """
    lq, lt = d.shape
    if lq < t_min or lt < t_min:
        raise ValueError(f"sequences must be at least t_min={t_min} frames")
    a = _diag_prefix(d)
    inf = np.inf
    best = np.full(lq + 1, inf)
    best[0] = 0.0
    from_j = np.zeros(lq + 1, dtype=np.intp)
    from_s = np.zeros(lq + 1, dtype=np.intp)
    candidates = 0
    for i in range(t_min, lq + 1):
        for j in range(0, i - t_min + 1):
            if not np.isfinite(best[j]):
                continue
            seg = i - j
            if seg > lt:
                continue
            vals = best[j] + (a[i, seg:] - a[j, : lt - seg + 1])
            candidates += vals.size
            s = int(np.argmin(vals))
            if vals[s] < best[i]:
                best[i] = vals[s]
                from_j[i] = j
                from_s[i] = s
    labels = np.empty(lq, dtype=np.intp)
    p = lq
    while p > 0:
        j, s = from_j[p], from_s[p]
        labels[j:p] = s + np.arange(p - j)
        p = j
    cost = float(best[lq]) / lq
    if return_stats:
        return cost, labels, {"candidates": candidates}
    return cost, labels


def pnn_bruteforce_from_costs(d, t_min, max_len=16):
    """Exhaustive minimum over all valid segmentations (tiny instances).

    Enumerates every composition of the length into parts of at least
    ``t_min`` frames and scans every window start per part, summing the
    per-frame costs directly.
    """
    lq, lt = d.shape
    if lq > max_len:
        raise ValueError(f"instance too large for enumeration ({lq} > {max_len})")

    def compositions(n):
        if n == 0:
            yield ()
            return
        for part in range(t_min, n + 1):
            if n - part == 0 or n - part >= t_min:
                for rest in compositions(n - part):
                    yield (part,) + rest

    best = np.inf
    for parts in compositions(lq):
        total = 0.0
        pos = 0
        ok = True
        for length in parts:
            if length > lt:
                ok = False
                break
            span = np.arange(length)
            seg_best = min(
                d[pos + span, s + span].sum() for s in range(lt - length + 1)
            )
            total += seg_best
            pos += length
        if ok and total < best:
            best = total
    return float(best) / lq


def rescore_labels(d, labels, t_min):
    """Re-score a labeling and verify segment feasibility."""
    lq = d.shape[0]
    breaks = [0] + [t for t in range(1, lq) if labels[t] != labels[t - 1] + 1] + [lq]
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a < t_min:
            raise ValueError(f"segment [{a}, {b}) shorter than t_min={t_min}")
    return float(d[np.arange(lq), labels].sum()) / lq


def pnn(q_feats, t_feats, t_min=PNN_MIN_SEGMENT, return_stats=False):
    """PNN cost and backtraced labels between two motions' features."""
    d = frame_distances(q_feats, t_feats)
    return pnn_from_costs(d, t_min, return_stats=return_stats)


def pnn_bruteforce(q_feats, t_feats, t_min):
    d = frame_distances(q_feats, t_feats)
    return pnn_bruteforce_from_costs(d, t_min)


# ---------------------------------------------------------------------------
# report


@dataclass
class MetricsReport:
    coverage: float
    coverage_per_sample: list
    pnn_cost: float
    pnn_per_sample: list
    local_diversity: float
    local_diversity_per_sample: list
    epsilon: float
    coverage_window: int = COVERAGE_WINDOW
    pnn_min_segment: int = PNN_MIN_SEGMENT
    diversity_window: int = DIVERSITY_WINDOW
    n_samples: int = 0
    sample_length: int = 0
    seed: int = 0
    wall_seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def default_epsilon(n_joints):
    """Empirical coverage threshold, proportional to the joint count."""
    return 0.1 * n_joints


def evaluate_samples(sample_motions, ref_motion, epsilon=None, seed=0):
    """Metrics of explicit sample motions against a reference motion."""
    t0 = time.perf_counter()
    ref_feats = rotation_features(ref_motion)
    if epsilon is None:
        epsilon = default_epsilon(ref_motion.n_joints)
    feats = [rotation_features(m) for m in sample_motions]
    cov_mean, cov_each = coverage(feats, ref_feats, epsilon)
    pnn_each = [pnn(f, ref_feats)[0] for f in feats]
    div_each = [local_diversity(f, ref_feats) for f in feats]
    return MetricsReport(
        coverage=cov_mean,
        coverage_per_sample=cov_each,
        pnn_cost=float(np.mean(pnn_each)),
        pnn_per_sample=pnn_each,
        local_diversity=float(np.mean(div_each)),
        local_diversity_per_sample=div_each,
        epsilon=float(epsilon),
        n_samples=len(sample_motions),
        sample_length=sample_motions[0].n_frames if sample_motions else 0,
        seed=seed,
        wall_seconds=time.perf_counter() - t0,
    )


def evaluate_model(
    checkpoint,
    ref_motion,
    n_samples=DEFAULT_SAMPLES,
    epsilon=None,
    length=None,
    seed=0,
):
    """Expectation-style metrics over freshly generated samples."""
    from .synthesis import generate

    length = length or ref_motion.n_frames
    samples = [
        generate(checkpoint, length, seed=seed + k) for k in range(n_samples)
    ]
    report = evaluate_samples(samples, ref_motion, epsilon=epsilon, seed=seed)
    report.extra["generated_length"] = length
    return report
