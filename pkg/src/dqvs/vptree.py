"""Vantage-point tree for exact k-nearest-neighbour queries over poses.

On sign-canonical poses ``dq_distance`` equals
sqrt(rot_chord(a, b)^2 + |t_a - t_b|^2 / 4), a product of two metrics, so
triangle-inequality pruning is exact.  A small slack absorbs rounding.
"""

import heapq
from dataclasses import dataclass

import numpy as np

from .dq import canonicalize, dq_distance

_SLACK = 1e-9


@dataclass(frozen=True)
class _Node:
    index: int
    radius: float = 0.0
    inside: "_Node" = None
    outside: "_Node" = None


class VpTree:
    """Immutable vp-tree; vantage points are drawn with a seeded RNG."""

    def __init__(self, poses, ids=None, seed=0, metric=dq_distance):
        poses = [canonicalize(p) for p in poses]
        if not poses:
            raise ValueError("cannot build a vp-tree from an empty list")
        if ids is None:
            ids = list(range(len(poses)))
        if len(ids) != len(poses):
            raise ValueError("ids and poses differ in length")
        self.poses = poses
        self.ids = list(ids)
        self.metric = metric
        rng = np.random.default_rng(seed)
        self.root = self._build(list(range(len(poses))), rng)

    def __len__(self):
        return len(self.poses)

    def _build(self, items, rng):
        if not items:
            return None
        vp = items.pop(int(rng.integers(len(items))))
        if not items:
            return _Node(vp)
        d = np.array([self.metric(self.poses[vp], self.poses[i]) for i in items])
        radius = float(np.median(d))
        inside = [i for i, di in zip(items, d) if di < radius]
        outside = [i for i, di in zip(items, d) if di >= radius]
        return _Node(vp, radius, self._build(inside, rng), self._build(outside, rng))

    def k_nearest(self, query, k):
        """The k closest stored poses as (id, distance), ascending, ties by id."""
        if not 1 <= k <= len(self):
            raise ValueError(f"k must be in [1, {len(self)}], got {k}")
        query = canonicalize(query)
        best = []  # max-heap on (distance, id) via negation
        stack = [(0.0, self.root)]
        while stack:
            bound, node = stack.pop()
            if node is None:
                continue
            if len(best) == k and bound > -best[0][0] + _SLACK:
                continue
            d = self.metric(query, self.poses[node.index])
            key = (-d, -self.ids[node.index])
            if len(best) < k:
                heapq.heappush(best, key)
            elif key > best[0]:
                heapq.heapreplace(best, key)
            # push the far side first so the near side is explored first
            near_in = d < node.radius
            far = (node.outside, max(node.radius - d, 0.0)) if near_in else (node.inside, max(d - node.radius, 0.0))
            near = (node.inside, max(d - node.radius, 0.0)) if near_in else (node.outside, max(node.radius - d, 0.0))
            stack.append((far[1], far[0]))
            stack.append((near[1], near[0]))
        return sorted(((-i, -nd) for nd, i in best), key=lambda r: (r[1], r[0]))


def build_vptree(poses, ids=None, seed=0):
    return VpTree(poses, ids, seed)


def k_nearest(tree, query, k):
    return tree.k_nearest(query, k)


def brute_force_k_nearest(poses, query, k, ids=None, metric=dq_distance):
    """Linear-scan reference for :meth:`VpTree.k_nearest`."""
    if ids is None:
        ids = list(range(len(poses)))
    if not 1 <= k <= len(poses):
        raise ValueError(f"k must be in [1, {len(poses)}], got {k}")
    query = canonicalize(query)
    scored = sorted(((metric(query, canonicalize(p)), i) for p, i in zip(poses, ids)))
    return [(i, d) for d, i in scored[:k]]
