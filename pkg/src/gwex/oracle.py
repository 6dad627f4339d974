"""Exact finite-state computations for exclusion on small trees.

States are bitmasks: bit x set means vertex x is occupied. Everything here is
dense linear algebra and is meant for trees with at most a dozen vertices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats
from scipy.sparse.csgraph import connected_components

from .errors import SingularSector, TooLarge

DEFAULT_CAP = 12
UNIFORMIZATION_TOL = 1e-12


@dataclass(frozen=True)
class FiniteTree:
    n: int
    edges: tuple
    root: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a tree needs at least one vertex")
        if len(self.edges) != self.n - 1:
            raise ValueError("a tree on n vertices has n - 1 edges")
        parent = list(range(self.n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b in self.edges:
            ra, rb = find(a), find(b)
            if ra == rb:
                raise ValueError("edges contain a cycle")
            parent[ra] = rb

    @property
    def adjacency(self) -> list:
        adj = [[] for _ in range(self.n)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return adj

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    def children(self) -> dict:
        """Children lists when the tree hangs from its root."""
        adj = self.adjacency
        out = {v: [] for v in range(self.n)}
        seen = {self.root}
        stack = [self.root]
        while stack:
            v = stack.pop()
            for u in sorted(adj[v]):
                if u not in seen:
                    seen.add(u)
                    out[v].append(u)
                    stack.append(u)
        return out


def path_tree(n: int, root: int = 0) -> FiniteTree:
    return FiniteTree(n, tuple((i, i + 1) for i in range(n - 1)), root)


def star_tree(leaves: int) -> FiniteTree:
    return FiniteTree(leaves + 1, tuple((0, i) for i in range(1, leaves + 1)), 0)


def _rooted_code(adj, v, parent) -> str:
    return "(" + "".join(sorted(_rooted_code(adj, u, v) for u in adj[v] if u != parent)) + ")"


def rooted_trees(n: int) -> list:
    """One representative of every rooted unlabeled tree on n vertices."""
    if n == 1:
        return [FiniteTree(1, ())]
    if n == 2:
        return [FiniteTree(2, ((0, 1),))]
    found = {}
    for seq in itertools.product(range(n), repeat=n - 2):
        edges = _prufer_edges(list(seq), n)
        adj = [[] for _ in range(n)]
        for a, b in edges:
            adj[a].append(b)
            adj[b].append(a)
        for r in range(n):
            code = _rooted_code(adj, r, -1)
            if code not in found:
                found[code] = FiniteTree(n, tuple(edges), r)
    return [found[c] for c in sorted(found)]


def _prufer_edges(seq, n):
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = min(i for i in range(n) if degree[i] == 1)
        edges.append((leaf, x))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = [i for i in range(n) if degree[i] == 1]
    edges.append((u, v))
    return edges


def tree_corpus(n_min: int = 2, n_max: int = 5) -> list:
    return [t for n in range(n_min, n_max + 1) for t in rooted_trees(n)]


@dataclass
class GeneratorMatrix:
    Q: np.ndarray
    model: str
    tree: FiniteTree

    @property
    def n_states(self) -> int:
        return self.Q.shape[0]


def jump_rates(ft: FiniteTree, model: str) -> dict:
    """Directed rates p(x, y) on the edges."""
    deg = ft.degrees
    rates = {}
    for a, b in ft.edges:
        for x, y in ((a, b), (b, a)):
            if model == "variable":
                rates[(x, y)] = 1.0
            elif model == "constant":
                rates[(x, y)] = 1.0 / deg[x]
            else:
                raise ValueError(f"unknown model {model!r}")
    return rates


def build_generator(ft: FiniteTree, model: str, cap: int = DEFAULT_CAP) -> GeneratorMatrix:
    if ft.n > cap:
        raise TooLarge(f"{ft.n} vertices exceeds the cap of {cap}")
    size = 1 << ft.n
    Q = np.zeros((size, size))
    states = np.arange(size)
    for (x, y), r in jump_rates(ft, model).items():
        mask = ((states >> x) & 1 == 1) & ((states >> y) & 1 == 0)
        src = states[mask]
        dst = src ^ (1 << x) ^ (1 << y)
        Q[src, dst] += r
    Q[states, states] = -Q.sum(axis=1)
    return GeneratorMatrix(Q, model, ft)


def popcounts(size: int) -> np.ndarray:
    s = np.arange(size)
    return np.array([bin(int(v)).count("1") for v in s], dtype=np.int64)


def stationary_distribution(g: GeneratorMatrix, particle_count: int | None = None) -> np.ndarray:
    """Solve pi Q = 0 on the whole space or on one particle-count sector."""
    size = g.n_states
    if particle_count is None:
        idx = np.arange(size)
    else:
        idx = np.flatnonzero(popcounts(size) == particle_count)
        if idx.size == 0:
            raise SingularSector(f"no states with {particle_count} particles")
    sub = g.Q[np.ix_(idx, idx)]
    ncomp, labels = connected_components(sub != 0, directed=True, connection="strong")
    if ncomp > 1:
        comps = [idx[labels == c].tolist() for c in range(ncomp)]
        raise SingularSector(f"sector splits into {ncomp} classes", comps)
    m = idx.size
    A = np.vstack([sub.T, np.ones((1, m))])
    b = np.zeros(m + 1)
    b[-1] = 1.0
    sol, *_ = linalg.lstsq(A, b)
    sol = np.clip(sol, 0.0, None)
    sol /= sol.sum()
    out = np.zeros(size)
    out[idx] = sol
    return out


def product_measure(marginals, palm_root: int | None = None) -> np.ndarray:
    """Product law over bitmask states with P(bit x) = marginals[x]."""
    q = np.asarray(marginals, dtype=float).copy()
    if palm_root is not None:
        q[palm_root] = 1.0
    n = q.size
    states = np.arange(1 << n)
    mu = np.ones(1 << n)
    for x in range(n):
        bit = (states >> x) & 1
        mu *= np.where(bit == 1, q[x], 1.0 - q[x])
    return mu


def bernoulli_marginals(ft: FiniteTree, rho: float) -> np.ndarray:
    return np.full(ft.n, float(rho))


def degree_marginals(ft: FiniteTree, alpha: float) -> np.ndarray:
    x = alpha * ft.degrees
    return x / (1.0 + x)


def check_detailed_balance(g: GeneratorMatrix, measure) -> float:
    mu = np.asarray(measure, dtype=float)
    if mu.shape != (g.n_states,):
        raise ValueError("measure and generator dimensions differ")
    F = mu[:, None] * g.Q
    np.fill_diagonal(F, 0.0)
    return float(np.max(np.abs(F - F.T))) if F.size else 0.0


def transient_distribution(g: GeneratorMatrix, init, t: float) -> np.ndarray:
    """init @ exp(tQ) by uniformization, truncated once the Poisson tail is below 1e-12."""
    p = np.asarray(init, dtype=float).copy()
    if t < 0:
        raise ValueError("time must be non-negative")
    lam = float(np.max(-np.diag(g.Q)))
    if t == 0 or lam == 0:
        return p
    P = np.eye(g.n_states) + g.Q / lam
    mean = lam * t
    kmax = int(stats.poisson.isf(UNIFORMIZATION_TOL, mean)) + 1
    weights = stats.poisson.pmf(np.arange(kmax + 1), mean)
    out = np.zeros_like(p)
    v = p
    for k in range(kmax + 1):
        out += weights[k] * v
        v = v @ P
    return out


def tagged_generator(ft: FiniteTree, model: str, cap: int = DEFAULT_CAP):
    """Generator on (configuration, tagged vertex) pairs.

    Returns (Q, states) where states[i] = (mask, x) with bit x set in mask.
    """
    if ft.n > cap:
        raise TooLarge(f"{ft.n} vertices exceeds the cap of {cap}")
    states = [(m, x) for m in range(1 << ft.n) for x in range(ft.n) if (m >> x) & 1]
    index = {s: i for i, s in enumerate(states)}
    Q = np.zeros((len(states), len(states)))
    rates = jump_rates(ft, model)
    for i, (m, tag) in enumerate(states):
        for (x, y), r in rates.items():
            if (m >> x) & 1 and not (m >> y) & 1:
                m2 = m ^ (1 << x) ^ (1 << y)
                tag2 = y if tag == x else tag
                Q[i, index[(m2, tag2)]] += r
    Q[np.arange(len(states)), np.arange(len(states))] = -Q.sum(axis=1)
    return Q, states


def tagged_position_distribution(ft: FiniteTree, model: str, marginals, t: float) -> np.ndarray:
    """Law of the tagged vertex at time t when it starts at the root under a Palm product law."""
    Q, states = tagged_generator(ft, model)
    mu = product_measure(marginals, palm_root=ft.root)
    init = np.array([mu[m] if x == ft.root else 0.0 for m, x in states])
    g = GeneratorMatrix(Q, model, ft)
    p = transient_distribution(g, init, t)
    out = np.zeros(ft.n)
    for w, (_, x) in zip(p, states):
        out[x] += w
    return out
