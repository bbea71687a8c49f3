"""Channel topology for skeleton-aware convolutions.

The convolution's cross-channel support follows a graph whose vertices
are the joints plus two kinds of virtual joints: one for the root
displacement and one per foot contact label.  The displacement vertex
attaches to the kinematic neighbors of the root; each contact vertex
attaches to its foot joint and to the displacement vertex.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .motion import ROT_Q


@dataclass
class MotionGraph:
    """Vertices, symmetric adjacency, and the feature-channel partition.

    Vertex order is: joints in skeleton order, then the displacement
    vertex, then one contact vertex per foot joint.  ``channel_map[v]``
    is the contiguous base-channel range of vertex v; ranges partition
    [0, F0).
    """

    n_joints: int
    n_contacts: int
    edges: list
    channel_map: list  # list of (start, width)

    @property
    def n_vertices(self):
        return self.n_joints + 1 + self.n_contacts

    @property
    def n_features(self):
        return self.n_joints * ROT_Q + 3 + self.n_contacts

    @property
    def displacement_vertex(self):
        return self.n_joints

    def contact_vertex(self, k):
        return self.n_joints + 1 + k

    def adjacency(self):
        adj = np.zeros((self.n_vertices, self.n_vertices), dtype=bool)
        for a, b in self.edges:
            adj[a, b] = adj[b, a] = True
        return adj

    def distances(self):
        """All-pairs hop distances by BFS (graphs here are tiny)."""
        n = self.n_vertices
        neighbors = [[] for _ in range(n)]
        for a, b in self.edges:
            neighbors[a].append(b)
            neighbors[b].append(a)
        dist = np.full((n, n), np.iinfo(np.int64).max, dtype=np.int64)
        for s in range(n):
            dist[s, s] = 0
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for v in neighbors[u]:
                    if dist[s, v] > dist[s, u] + 1:
                        dist[s, v] = dist[s, u] + 1
                        queue.append(v)
        return dist


def build_motion_graph(skeleton):
    """Derive the channel topology from a skeleton."""
    j = skeleton.n_joints
    c = skeleton.n_contacts
    disp = j
    edges = []
    for child in range(1, j):
        edges.append((skeleton.parents[child], child))
    for neighbor in skeleton.children(0):
        edges.append((disp, neighbor))
    for k, foot in enumerate(skeleton.foot_joints):
        edges.append((j + 1 + k, foot))
        edges.append((j + 1 + k, disp))

    channel_map = [(v * ROT_Q, ROT_Q) for v in range(j)]
    channel_map.append((j * ROT_Q, 3))
    for k in range(c):
        channel_map.append((j * ROT_Q + 3 + k, 1))
    return MotionGraph(j, c, edges, channel_map)


def vertex_channel_ranges(graph, mult):
    """Channel ranges when every vertex's base width is scaled by ``mult``."""
    ranges = []
    start = 0
    for _, width in graph.channel_map:
        ranges.append((start, width * mult))
        start += width * mult
    return ranges


def support_mask(graph, hop_distance, in_mult=1, out_mult=1):
    """Boolean [C_out, C_in] support table for a skeleton-aware conv.

    Channel pair (out, in) is allowed iff the owning vertices are
    within ``hop_distance`` hops.  Multipliers scale every vertex's
    base channel width uniformly (layer widths F0 vs 2*F0).
    """
    dist = graph.distances()
    rows = vertex_channel_ranges(graph, out_mult)
    cols = vertex_channel_ranges(graph, in_mult)
    c_out = sum(w for _, w in rows)
    c_in = sum(w for _, w in cols)
    mask = np.zeros((c_out, c_in), dtype=bool)
    for u, (r0, rw) in enumerate(rows):
        for v, (c0, cw) in enumerate(cols):
            if dist[u, v] <= hop_distance:
                mask[r0 : r0 + rw, c0 : c0 + cw] = True
    return mask
