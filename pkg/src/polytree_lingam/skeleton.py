"""Skeleton recovery: the maximum-|correlation| spanning tree via Kruskal."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .cumulants import CorrelationMatrix
from .errors import DataError

__all__ = ["UnionFind", "UndirectedTree", "chow_liu"]

_UNPACK_CHUNK = 1 << 20


class UnionFind:
    """Disjoint sets with path compression and union by rank."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> bool:
        """Merge the sets of x and y; False if they were already joined."""
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if self.rank[rx] < self.rank[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        if self.rank[rx] == self.rank[ry]:
            self.rank[rx] += 1
        return True


@dataclass(frozen=True)
class UndirectedTree:
    """A spanning tree on p vertices; edges are (i, j) pairs with i < j.

    ``weights`` holds the absolute correlation each edge was selected with,
    when the tree came out of :func:`chow_liu`; generated trees carry None.
    """

    p: int
    edges: tuple
    weights: tuple | None = None

    def __post_init__(self):
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.weights is not None:
            if len(self.weights) != len(edges):
                raise ValueError("one weight per edge required")
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.p < 1:
            raise ValueError("tree needs at least one vertex")
        if len(edges) != self.p - 1:
            raise ValueError(f"a tree on {self.p} vertices has {self.p - 1} edges, got {len(edges)}")
        uf = UnionFind(self.p)
        for i, j in edges:
            if not (0 <= i < j < self.p):
                raise ValueError(f"edge ({i}, {j}) invalid for p={self.p}")
            if not uf.union(i, j):
                raise ValueError(f"edge ({i}, {j}) closes a cycle")
        # p-1 acyclic edges on p vertices are necessarily connected

    @cached_property
    def adjacency(self) -> tuple:
        nbrs = [[] for _ in range(self.p)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return tuple(tuple(sorted(a)) for a in nbrs)

    def to_text_lines(self) -> list:
        weights = self.weights or (float("nan"),) * len(self.edges)
        return [f"{i} {j} {w!r}" for (i, j), w in zip(self.edges, weights)]


def chow_liu(corr: CorrelationMatrix) -> UndirectedTree:
    """Maximum-weight spanning tree of the complete graph under |correlation|
    weights, by Kruskal over all p(p-1)/2 candidate pairs.

    Ties are broken deterministically: weight descending, then lexicographic
    (min(i,j), max(i,j)).  Zero-weight pairs still participate (ranked last)
    so a spanning tree always comes back.
    """
    p = corr.p
    if p < 2:
        raise ValueError("need at least two variables to build a skeleton")
    weights = corr.abs_weights()
    if np.isnan(weights).any():
        raise DataError("correlation matrix contains NaN entries")
    # stable sort on descending weight leaves equal weights in packed order,
    # which is exactly lexicographic (i, j)
    order = np.argsort(-weights, kind="stable")
    idx = np.arange(p + 1, dtype=np.int64)
    offsets = idx * (2 * p - idx - 1) // 2

    uf = UnionFind(p)
    chosen = []
    done = False
    for start in range(0, order.size, _UNPACK_CHUNK):
        block = order[start : start + _UNPACK_CHUNK]
        ii = np.searchsorted(offsets, block, side="right") - 1
        jj = block - offsets[ii] + ii + 1
        for a, b, k in zip(ii.tolist(), jj.tolist(), block.tolist()):
            if uf.union(a, b):
                chosen.append((a, b, float(weights[k])))
                if len(chosen) == p - 1:
                    done = True
                    break
        if done:
            break
    chosen.sort(key=lambda t: (t[0], t[1]))
    return UndirectedTree(
        p,
        tuple((a, b) for a, b, _ in chosen),
        tuple(w for _, _, w in chosen),
    )
