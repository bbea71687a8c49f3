"""Coverage, PNN dynamic program vs exhaustive oracle, local diversity."""

import time

import numpy as np
import pytest

from monomotion.metrics import (
    coverage,
    coverage_of_sample,
    evaluate_samples,
    frame_distances,
    local_diversity,
    nn_distance,
    pnn,
    pnn_bruteforce_from_costs,
    pnn_from_costs,
    rescore_labels,
    rotation_features,
)
from monomotion.motion import matrix_to_rot6d, rot6d_to_matrix

from conftest import sine_walk, two_joint_skeleton
from scipy.spatial.transform import Rotation as R


@pytest.fixture(scope="module")
def ref_motion():
    return sine_walk(two_joint_skeleton(), 90)


def random_costs(rng, lq, lt, integer=True):
    if integer:
        return rng.integers(0, 50, size=(lq, lt)).astype(np.float64)
    return rng.random((lq, lt))


class TestNnDistance:
    def test_window_of_reference_is_zero(self, ref_motion):
        feats = rotation_features(ref_motion)
        assert nn_distance(feats[20:45], feats) == 0.0

    def test_single_frame_closed_form(self):
        # squared Frobenius distance of rotations is 6 - 2 tr(R1^T R2)
        sk = two_joint_skeleton()
        m1 = np.stack([np.eye(3), R.from_euler("Y", 30, degrees=True).as_matrix()])
        m2 = np.stack(
            [R.from_euler("X", 70, degrees=True).as_matrix(), np.eye(3)]
        )
        f1 = np.concatenate([matrix_to_rot6d(m) for m in m1])[None, :]
        f2 = np.concatenate([matrix_to_rot6d(m) for m in m2])[None, :]
        x1 = rot6d_to_matrix(f1.reshape(1, 2, 6)).reshape(1, -1)
        x2 = rot6d_to_matrix(f2.reshape(1, 2, 6)).reshape(1, -1)
        expected = sum(
            6.0 - 2.0 * np.trace(a.T @ b) for a, b in zip(m1, m2)
        )
        assert nn_distance(x1, x2) == pytest.approx(expected, rel=1e-12)

    def test_agrees_with_exhaustive_scan(self, ref_motion):
        rng = np.random.default_rng(0)
        feats = rotation_features(ref_motion)
        for _ in range(10):
            a = rng.integers(0, 50)
            q1 = feats[a : a + rng.integers(5, 20)]
            d = frame_distances(q1, feats)
            expected = min(
                sum(d[m, k + m] for m in range(len(q1)))
                for k in range(feats.shape[0] - len(q1) + 1)
            ) / len(q1)
            assert nn_distance(q1, feats) == pytest.approx(expected, rel=1e-12)

    def test_longer_query_rejected(self, ref_motion):
        feats = rotation_features(ref_motion)
        with pytest.raises(ValueError):
            nn_distance(feats, feats[:10])


class TestCoverage:
    def test_self_coverage_is_one(self, ref_motion):
        feats = rotation_features(ref_motion)
        assert coverage_of_sample(feats, feats, epsilon=1e-9) == 1.0

    def test_vanishing_epsilon_gives_zero(self, ref_motion):
        other = sine_walk(two_joint_skeleton(), 90, swing=0.31, period=17)
        f1, f2 = rotation_features(other), rotation_features(ref_motion)
        assert coverage_of_sample(f1, f2, epsilon=1e-15) == 0.0

    def test_monotone_in_epsilon(self, ref_motion):
        other = sine_walk(two_joint_skeleton(), 120, swing=0.4, period=23)
        f1, f2 = rotation_features(other), rotation_features(ref_motion)
        values = [coverage_of_sample(f1, f2, eps) for eps in (1e-4, 1e-2, 1e-1, 1.0, 10.0)]
        assert values == sorted(values)
        assert values[-1] == 1.0

    def test_mean_over_samples(self, ref_motion):
        feats = rotation_features(ref_motion)
        other = rotation_features(sine_walk(two_joint_skeleton(), 90, swing=0.9, period=11))
        mean, each = coverage([feats, other], feats, epsilon=1e-6)
        assert mean == pytest.approx(np.mean(each))
        assert each[0] == 1.0


class TestPnn:
    def test_identity_segmentation(self, ref_motion):
        feats = rotation_features(ref_motion)
        cost, labels = pnn(feats, feats, t_min=30)
        assert cost == 0.0
        assert np.array_equal(labels, np.arange(feats.shape[0]))

    def test_dp_matches_bruteforce_on_many_instances(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            lq = int(rng.integers(4, 13))
            lt = int(rng.integers(lq, 21))
            t_min = int(rng.integers(2, 4))
            d = random_costs(rng, lq, lt)
            cost, labels = pnn_from_costs(d, t_min)
            brute = pnn_bruteforce_from_costs(d, t_min)
            assert cost == brute
            assert rescore_labels(d, labels, t_min) == cost

    def test_single_segment_regime_equals_window_scan(self):
        rng = np.random.default_rng(8)
        d = random_costs(rng, 8, 15)
        cost, labels = pnn_from_costs(d, t_min=8)  # t_min = L_Q: one segment only
        span = np.arange(8)
        expected = min(d[span, s + span].sum() for s in range(8)) / 8
        assert cost == expected
        assert labels[0] + 7 == labels[-1]

    def test_dp_never_beaten_by_manual_segmentations(self):
        rng = np.random.default_rng(9)
        d = random_costs(rng, 10, 14, integer=False)
        cost, _ = pnn_from_costs(d, t_min=3)
        for _ in range(50):
            cut = int(rng.integers(3, 8))
            if 10 - cut < 3:
                continue
            s1 = int(rng.integers(0, 14 - cut + 1))
            s2 = int(rng.integers(0, 14 - (10 - cut) + 1))
            manual = (
                d[np.arange(cut), s1 + np.arange(cut)].sum()
                + d[cut + np.arange(10 - cut), s2 + np.arange(10 - cut)].sum()
            ) / 10
            assert cost <= manual + 1e-12

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            pnn_from_costs(np.zeros((5, 20)), t_min=6)

    def test_runtime_scaling(self):
        # the work is bounded by L_Q^2 / 2 segment starts of at most
        # L_T - t_min + 1 candidates each: O(L_Q^2 * L_T) with an
        # explicit constant, and doubling both sizes stays near 2^3
        rng = np.random.default_rng(10)
        counts = {}
        for lq, lt in ((20, 40), (40, 80), (80, 160)):
            d = random_costs(rng, lq, lt)
            _, _, stats = pnn_from_costs(d, 3, return_stats=True)
            counts[(lq, lt)] = stats["candidates"]
            assert stats["candidates"] <= 0.5 * lq * lq * (lt + 1)
        assert counts[(40, 80)] / counts[(20, 40)] < 12.0
        assert counts[(80, 160)] / counts[(40, 80)] < 10.0
        t0 = time.perf_counter()
        pnn_from_costs(random_costs(rng, 80, 160), 3)
        assert time.perf_counter() - t0 < 5.0


class TestLocalDiversity:
    def test_self_is_zero(self, ref_motion):
        feats = rotation_features(ref_motion)
        assert local_diversity(feats, feats) == 0.0

    def test_double_loop_oracle(self, ref_motion):
        feats = rotation_features(ref_motion)
        probe = rotation_features(sine_walk(two_joint_skeleton(), 40, swing=0.7, period=13))
        d = frame_distances(probe, feats)
        window = 15
        total = 0.0
        n_win = probe.shape[0] - window + 1
        for i in range(n_win):
            best = min(
                sum(d[i + m, k + m] for m in range(window))
                for k in range(feats.shape[0] - window + 1)
            )
            total += best / window
        assert local_diversity(probe, feats) == pytest.approx(total / n_win, rel=1e-12)

    def test_too_short_rejected(self, ref_motion):
        feats = rotation_features(ref_motion)
        with pytest.raises(ValueError):
            local_diversity(feats[:10], feats)


class TestInvariances:
    def test_metrics_ignore_displacement(self, ref_motion):
        shifted = ref_motion.copy()
        shifted.root_disp[:] += [5.0, -2.0, 9.0]
        f1 = rotation_features(ref_motion)
        f2 = rotation_features(shifted)
        assert np.array_equal(f1, f2)

    def test_metrics_ignore_contacts(self, ref_motion):
        flipped = ref_motion.copy()
        flipped.contacts[:] = 1.0 - flipped.contacts
        assert np.array_equal(rotation_features(ref_motion), rotation_features(flipped))


def test_evaluate_samples_report(ref_motion):
    probe = sine_walk(two_joint_skeleton(), 90, swing=0.52, period=19)
    report = evaluate_samples([probe], ref_motion, epsilon=0.2, seed=3)
    assert report.n_samples == 1
    assert report.epsilon == 0.2
    assert 0.0 <= report.coverage <= 1.0
    payload = report.to_json()
    assert '"pnn_min_segment": 30' in payload
    assert '"epsilon": 0.2' in payload


def test_self_evaluation_fixed_points(ref_motion):
    report = evaluate_samples([ref_motion], ref_motion, epsilon=0.2)
    assert report.coverage == 1.0
    assert report.pnn_cost == 0.0
    assert report.local_diversity == 0.0


def test_union_coverage_monotone_in_samples(ref_motion):
    from monomotion.metrics import coverage_union

    ref = rotation_features(ref_motion)
    probes = [
        rotation_features(sine_walk(two_joint_skeleton(), 60, swing=s, period=p))
        for s, p in ((0.3, 14), (0.45, 22), (0.5, 20))
    ]
    eps = 0.05
    values = [coverage_union(probes[: k + 1], ref, eps) for k in range(3)]
    assert values == sorted(values)
    # a sample equal to the reference pushes the union to full coverage
    assert coverage_union(probes + [ref], ref, eps) == 1.0
