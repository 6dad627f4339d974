"""Lazily grown Galton-Watson trees backed by a flat node table.

Node ids are row indices into the table. Children of a node occupy a
contiguous block of rows, allocated the first time they are requested.
"""

from __future__ import annotations

import json
from collections import deque

import numpy as np

from . import _kernel as K
from .errors import UnknownNode
from .offspring import OffspringDistribution

GW = "GW"
AGW = "AGW"
FROZEN = "FROZEN"

_INITIAL_CAPACITY = 256


class LazyTree:
    """Rooted tree whose children are revealed on demand.

    The whole tree is a pure function of ``(offspring, flavor, tree_seed)``:
    node keys are hashed from the parent key and the child index, and the
    offspring count of a node is hashed from its key. The distinguished ray
    is the leftmost-child path from the root.
    """

    def __init__(self, offspring: OffspringDistribution | None, flavor: str, tree_seed: int,
                 capacity: int = _INITIAL_CAPACITY):
        if flavor not in (GW, AGW, FROZEN):
            raise ValueError(f"unknown flavor {flavor!r}")
        self.offspring = offspring
        self.flavor = flavor
        self.tree_seed = int(tree_seed) & 0xFFFFFFFFFFFFFFFF
        self.nodes = np.zeros((capacity, K.NFIELDS), dtype=np.int64)
        self.keys = np.zeros(capacity, dtype=np.uint64)
        self.meta = np.zeros(2, dtype=np.int64)
        self.meta[K.AGW] = 1 if flavor == AGW else 0
        if offspring is not None:
            self.ks = offspring.ks
            self.cdf = offspring.cdf
            self._max_children = offspring.max_k + 1
        else:
            self.ks = np.ones(1, dtype=np.int64)
            self.cdf = np.ones(1, dtype=np.float64)
            self._max_children = 0
        K.reset_store(self.nodes, self.keys, self.meta, np.uint64(self.tree_seed))
        self.labels = None

    # -- construction helpers

    @classmethod
    def frozen(cls, children: dict, root=0, tree_seed: int = 0) -> "LazyTree":
        """Finite tree from a ``label -> [child labels]`` mapping.

        Nodes are renumbered breadth-first; ``labels[i]`` gives the original
        label of node ``i`` and ``node_of(label)`` the reverse.
        """
        order = [root]
        parent = {root: None}
        q = deque([root])
        while q:
            v = q.popleft()
            for c in children.get(v, ()):
                if c in parent:
                    raise ValueError("children mapping is not a tree")
                parent[c] = v
                order.append(c)
                q.append(c)
        n = len(order)
        t = cls(None, FROZEN, tree_seed, capacity=max(n, 1))
        index = {lab: i for i, lab in enumerate(order)}
        nodes, keys = t.nodes, t.keys
        nxt = 1
        for i, lab in enumerate(order):
            kids = list(children.get(lab, ()))
            nodes[i, K.FIRST] = nxt
            nodes[i, K.NCHILD] = len(kids)
            on_ray = nodes[i, K.RAYDEPTH] == nodes[i, K.DEPTH]
            for j, c in enumerate(kids):
                ci = index[c]
                assert ci == nxt + j
                nodes[ci, K.PARENT] = i
                nodes[ci, K.DEPTH] = nodes[i, K.DEPTH] + 1
                nodes[ci, K.RAYDEPTH] = nodes[i, K.RAYDEPTH] + (1 if on_ray and j == 0 else 0)
                nodes[ci, K.CINDEX] = j
                keys[ci] = K.hash2(keys[i], np.uint64(j + 1))
            nxt += len(kids)
        t.meta[K.COUNT] = n
        t.labels = order
        t._index = index
        return t

    def node_of(self, label) -> int:
        if self.labels is None:
            raise UnknownNode(label)
        try:
            return self._index[label]
        except KeyError:
            raise UnknownNode(label) from None

    # -- storage

    @property
    def size(self) -> int:
        """Number of nodes materialized so far."""
        return int(self.meta[K.COUNT])

    @property
    def capacity(self) -> int:
        return self.nodes.shape[0]

    @property
    def store(self):
        return K.Store(self.nodes, self.keys, self.meta, self.ks, self.cdf)

    def grow(self, min_capacity: int):
        cap = self.capacity
        if cap >= min_capacity:
            return
        new = max(min_capacity, 2 * cap)
        nodes = np.zeros((new, K.NFIELDS), dtype=np.int64)
        keys = np.zeros(new, dtype=np.uint64)
        n = self.size
        nodes[:n] = self.nodes[:n]
        keys[:n] = self.keys[:n]
        self.nodes, self.keys = nodes, keys

    def _check(self, v) -> int:
        if isinstance(v, (bool, np.bool_)) or not isinstance(v, (int, np.integer)):
            raise UnknownNode(v)
        v = int(v)
        if not 0 <= v < self.size:
            raise UnknownNode(v)
        return v

    def _materialize(self, v: int):
        if self.nodes[v, K.FIRST] >= 0:
            return
        self.grow(self.size + self._max_children)
        K.materialize(self.nodes, self.keys, self.meta, self.ks, self.cdf, v)

    # -- structure

    @property
    def root(self) -> int:
        return 0

    def children(self, v) -> list:
        v = self._check(v)
        self._materialize(v)
        first = int(self.nodes[v, K.FIRST])
        return list(range(first, first + int(self.nodes[v, K.NCHILD])))

    def is_materialized(self, v) -> bool:
        return bool(self.nodes[self._check(v), K.FIRST] >= 0)

    def parent(self, v):
        p = int(self.nodes[self._check(v), K.PARENT])
        return None if p < 0 else p

    def depth(self, v) -> int:
        return int(self.nodes[self._check(v), K.DEPTH])

    def child_index(self, v) -> int:
        return int(self.nodes[self._check(v), K.CINDEX])

    def node_key(self, v) -> int:
        return int(self.keys[self._check(v)])

    def degree(self, v) -> int:
        v = self._check(v)
        self._materialize(v)
        return int(K.degree(self.nodes, v))

    def neighbors(self, v) -> list:
        p = self.parent(v)
        kids = self.children(v)
        return kids if p is None else [p] + kids

    def path_from_root(self, v) -> list:
        """Child indices leading from the root to v."""
        v = self._check(v)
        out = []
        while v != 0:
            out.append(int(self.nodes[v, K.CINDEX]))
            v = int(self.nodes[v, K.PARENT])
        return out[::-1]

    def descend(self, path) -> int:
        """Node reached from the root by following child indices."""
        v = 0
        for i in path:
            kids = self.children(v)
            v = kids[i]
        return v

    # -- ray and horodistance

    def on_ray(self, v) -> bool:
        v = self._check(v)
        return bool(self.nodes[v, K.RAYDEPTH] == self.nodes[v, K.DEPTH])

    def ray_next(self, v) -> int:
        v = self._check(v)
        if self.on_ray(v):
            return self.children(v)[0]
        return int(self.nodes[v, K.PARENT])

    def busemann(self, v) -> int:
        """Horodistance of v relative to the original root."""
        v = self._check(v)
        return int(self.nodes[v, K.DEPTH] - 2 * self.nodes[v, K.RAYDEPTH])

    def horodistance(self, x, y) -> int:
        """Signed horodistance of y seen from x."""
        return self.busemann(y) - self.busemann(x)

    def distance(self, a, b) -> int:
        a, b = self._check(a), self._check(b)
        nodes = self.nodes
        d = 0
        while nodes[a, K.DEPTH] > nodes[b, K.DEPTH]:
            a = nodes[a, K.PARENT]
            d += 1
        while nodes[b, K.DEPTH] > nodes[a, K.DEPTH]:
            b = nodes[b, K.PARENT]
            d += 1
        while a != b:
            a = nodes[a, K.PARENT]
            b = nodes[b, K.PARENT]
            d += 2
        return d

    def common_ancestor(self, a, b) -> int:
        a, b = self._check(a), self._check(b)
        nodes = self.nodes
        while nodes[a, K.DEPTH] > nodes[b, K.DEPTH]:
            a = nodes[a, K.PARENT]
        while nodes[b, K.DEPTH] > nodes[a, K.DEPTH]:
            b = nodes[b, K.PARENT]
        while a != b:
            a = nodes[a, K.PARENT]
            b = nodes[b, K.PARENT]
        return int(a)

    def to_json(self) -> str:
        rows = []
        for v in range(self.size):
            kids = []
            if self.nodes[v, K.FIRST] >= 0:
                f = int(self.nodes[v, K.FIRST])
                kids = list(range(f, f + int(self.nodes[v, K.NCHILD])))
            rows.append({"id": v, "parent": self.parent(v), "children": kids,
                         "depth": self.depth(v)})
        return json.dumps(rows)


def sample_tree(d: OffspringDistribution, flavor: str, tree_seed: int) -> LazyTree:
    if flavor not in (GW, AGW):
        raise ValueError(f"flavor must be GW or AGW, got {flavor!r}")
    return LazyTree(d, flavor, tree_seed)


def children(t: LazyTree, v) -> list:
    return t.children(v)


def degree(t: LazyTree, v) -> int:
    return t.degree(v)


def ray_next(t: LazyTree, v) -> int:
    return t.ray_next(v)


def horodistance(t: LazyTree, x, y) -> int:
    return t.horodistance(x, y)


# -- canonical codes

def encode(color, child_codes) -> bytes:
    """Code of a rooted ball given its root color and its subtrees' codes."""
    tag = b"" if color is None else (b"1" if color else b"0")
    return b"(" + tag + b"".join(sorted(child_codes)) + b")"


def _occupancy_fn(occupancy):
    if occupancy is None:
        return None
    if hasattr(occupancy, "occupancy"):
        return occupancy.occupancy
    if callable(occupancy):
        return occupancy
    return occupancy.__getitem__


def canonical_ball_code(t: LazyTree, occupancy, center, r: int) -> bytes:
    """Isomorphism-invariant code of the (optionally colored) ball B_r(center).

    ``occupancy`` may be None, a Configuration, a mapping or a callable.
    """
    if r < 0:
        raise ValueError("radius must be non-negative")
    center = t._check(center)
    color_of = _occupancy_fn(occupancy)

    def rec(v, came_from, left):
        kids = []
        if left > 0:
            for u in t.neighbors(v):
                if u != came_from:
                    kids.append(rec(u, v, left - 1))
        return encode(None if color_of is None else color_of(v), kids)

    return rec(center, None, r)
