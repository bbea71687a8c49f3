"""Channel topology and skeleton-aware support masks."""

import numpy as np
import pytest

from monomotion import Skeleton, build_motion_graph, support_mask, parse_bvh
from monomotion.graph import vertex_channel_ranges

from conftest import two_joint_skeleton, humanoid_bvh


def chain_skeleton(n, feet=()):
    return Skeleton(
        names=[f"j{i}" for i in range(n)],
        parents=[-1] + list(range(n - 1)),
        offsets=np.zeros((n, 3)),
        foot_joints=list(feet),
    )


class TestBuildMotionGraph:
    def test_two_joint_chain_without_feet(self):
        g = build_motion_graph(chain_skeleton(2))
        assert g.n_vertices == 3
        assert sorted(tuple(sorted(e)) for e in g.edges) == [(0, 1), (1, 2)]
        # vertex 2 is the displacement joint, attached to the root's neighbor

    def test_humanoid_vertex_count(self):
        sk, _ = parse_bvh(humanoid_bvh())
        g = build_motion_graph(sk)
        assert g.n_vertices == sk.n_joints + 1 + 4

    def test_adjacency_symmetric(self):
        sk, _ = parse_bvh(humanoid_bvh())
        adj = build_motion_graph(sk).adjacency()
        assert np.array_equal(adj, adj.T)

    def test_contact_vertices_touch_foot_and_displacement(self):
        sk = two_joint_skeleton()
        g = build_motion_graph(sk)
        contact = g.contact_vertex(0)
        disp = g.displacement_vertex
        edges = {tuple(sorted(e)) for e in g.edges}
        assert tuple(sorted((contact, 1))) in edges
        assert tuple(sorted((contact, disp))) in edges

    def test_channel_ranges_partition_features(self):
        sk = two_joint_skeleton()
        g = build_motion_graph(sk)
        spans = sorted(g.channel_map)
        assert spans[0][0] == 0
        total = 0
        for start, width in spans:
            assert start == total
            total += width
        assert total == g.n_features == sk.n_features

    def test_graph_connected(self):
        sk, _ = parse_bvh(humanoid_bvh())
        dist = build_motion_graph(sk).distances()
        assert dist.max() < np.iinfo(np.int64).max


class TestSupportMask:
    def test_zero_hops_is_block_diagonal(self):
        g = build_motion_graph(chain_skeleton(3))
        mask = support_mask(g, 0)
        for u, (r0, rw) in enumerate(vertex_channel_ranges(g, 1)):
            for v, (c0, cw) in enumerate(vertex_channel_ranges(g, 1)):
                block = mask[r0 : r0 + rw, c0 : c0 + cw]
                assert block.all() if u == v else not block.any()

    def test_full_support_beyond_diameter(self):
        sk = two_joint_skeleton()
        g = build_motion_graph(sk)
        assert support_mask(g, 10).all()

    def test_three_vertex_path_one_hop(self):
        # path j0 - j1 - disp: with d=1 the ends must not see one another
        g = build_motion_graph(chain_skeleton(2))
        mask = support_mask(g, 1)
        ranges = vertex_channel_ranges(g, 1)
        (r0, rw), (c0, cw) = ranges[0], ranges[2]
        assert not mask[r0 : r0 + rw, c0 : c0 + cw].any()
        assert not mask[c0 : c0 + cw, r0 : r0 + rw].any()

    def test_distances_match_bfs_oracle_on_random_trees(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(2, 9))
            parents = [-1] + [int(rng.integers(0, j)) for j in range(1, n)]
            sk = Skeleton(
                names=[f"j{i}" for i in range(n)],
                parents=parents,
                offsets=np.zeros((n, 3)),
                foot_joints=[n - 1],
            )
            g = build_motion_graph(sk)
            dist = g.distances()
            adj = g.adjacency()
            # plain matrix-power BFS oracle
            oracle = np.full_like(dist, np.iinfo(np.int64).max)
            np.fill_diagonal(oracle, 0)
            reach = np.eye(g.n_vertices, dtype=bool)
            for step in range(1, g.n_vertices):
                reach = reach | (reach @ adj)
                newly = reach & (oracle == np.iinfo(np.int64).max)
                oracle[newly] = step
            assert np.array_equal(dist, oracle)

    def test_doubling_multipliers_preserves_block_pattern(self):
        sk = two_joint_skeleton()
        g = build_motion_graph(sk)
        base = support_mask(g, 2, 1, 1)
        doubled = support_mask(g, 2, 2, 2)
        for u, (r0, rw) in enumerate(vertex_channel_ranges(g, 1)):
            for v, (c0, cw) in enumerate(vertex_channel_ranges(g, 1)):
                b = base[r0, c0]
                r2 = vertex_channel_ranges(g, 2)[u]
                c2 = vertex_channel_ranges(g, 2)[v]
                block = doubled[r2[0] : r2[0] + r2[1], c2[0] : c2[0] + c2[1]]
                assert block.all() if b else not block.any()

    def test_mask_shape_with_mixed_multipliers(self):
        sk = two_joint_skeleton()
        g = build_motion_graph(sk)
        f0 = sk.n_features
        assert support_mask(g, 2, 1, 2).shape == (2 * f0, f0)
        assert support_mask(g, 2, 2, 1).shape == (f0, 2 * f0)
