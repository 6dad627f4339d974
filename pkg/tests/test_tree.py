import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from gwex.errors import UnknownNode
from gwex.offspring import new_offspring
from gwex.oracle import FiniteTree, rooted_trees
from gwex.tree import (AGW, GW, LazyTree, canonical_ball_code, children, degree, horodistance,
                       ray_next, sample_tree)

from strategies import offspring_laws

REGULAR = new_offspring({2: 1.0})
MIXED = new_offspring({1: 0.5, 3: 0.5})


def random_walk_nodes(t, seed, steps):
    """Nodes visited by a simple random walk, which also materializes them."""
    rng = np.random.default_rng(seed)
    v, out = t.root, [t.root]
    for _ in range(steps):
        nb = t.neighbors(v)
        v = nb[rng.integers(len(nb))]
        out.append(v)
    return out


def figure_tree():
    # o has the ray neighbour a and two more neighbours y, c; x hangs off a.
    kids = {"o": ["a", "y", "c"], "a": ["b", "g", "x"], "y": ["d", "e"], "c": ["f"]}
    return LazyTree.frozen(kids, root="o")


class TestSampling:
    def test_regular_root_degree(self):
        for seed in range(50):
            t = sample_tree(REGULAR, AGW, seed)
            assert degree(t, t.root) == 3
            assert len(children(t, t.root)) == 3

    def test_nothing_materialized_up_front(self):
        t = sample_tree(MIXED, AGW, 3)
        assert t.size == 1
        assert not t.is_materialized(t.root)

    def test_gw_root_has_no_extra_edge(self):
        for seed in range(50):
            t = sample_tree(REGULAR, GW, seed)
            assert degree(t, t.root) == 2

    def test_agw_root_degree_law(self):
        n = 100_000
        hits = sum(degree(sample_tree(MIXED, AGW, s), 0) == 2 for s in range(n))
        assert abs(hits / n - 0.5) <= 0.01

    def test_child_offspring_law(self):
        n = 100_000
        counts = Counter()
        for s in range(n):
            t = sample_tree(MIXED, AGW, s)
            counts[len(children(t, children(t, t.root)[1]))] += 1
        obs = [counts[1], counts[3]]
        assert sum(obs) == n
        assert stats.chisquare(obs, [n / 2, n / 2]).pvalue > 0.01

    def test_interior_degree_law(self):
        t = sample_tree(MIXED, AGW, 11)
        nodes = set(random_walk_nodes(t, 0, 4000)) - {0}
        degs = Counter(degree(t, v) for v in nodes)
        assert set(degs) <= {2, 4}

    def test_bad_flavor(self):
        with pytest.raises(ValueError):
            sample_tree(REGULAR, "UGW", 0)


class TestDeterminism:
    @given(offspring_laws(), st.integers(0, 2**64 - 1))
    def test_same_seed_same_balls(self, d, seed):
        a, b = sample_tree(d, AGW, seed), sample_tree(d, AGW, seed)
        for r in range(4):
            assert canonical_ball_code(a, None, 0, r) == canonical_ball_code(b, None, 0, r)

    @given(offspring_laws(), st.integers(0, 2**32), st.integers(0, 1000))
    def test_exploration_order_irrelevant(self, d, seed, walk_seed):
        a, b = sample_tree(d, AGW, seed), sample_tree(d, AGW, seed)
        visited = random_walk_nodes(a, walk_seed, 60)
        random_walk_nodes(b, walk_seed + 1, 60)
        for v in visited:
            w = b.descend(a.path_from_root(v))
            assert a.node_key(v) == b.node_key(w)
            assert a.degree(v) == b.degree(w)
            assert a.busemann(v) == b.busemann(w)

    def test_children_idempotent(self):
        t = sample_tree(MIXED, AGW, 5)
        first = children(t, 0)
        size = t.size
        assert children(t, 0) == first
        assert t.size == size

    def test_to_json_stable(self):
        a, b = sample_tree(MIXED, AGW, 8), sample_tree(MIXED, AGW, 8)
        random_walk_nodes(a, 1, 30)
        random_walk_nodes(b, 1, 30)
        assert a.to_json() == b.to_json()


class TestStructure:
    def test_unknown_node(self):
        t = sample_tree(REGULAR, AGW, 0)
        for bad in (5, -1, "x", 1.0, True):
            with pytest.raises(UnknownNode):
                children(t, bad)
        with pytest.raises(UnknownNode):
            degree(t, 99)
        with pytest.raises(UnknownNode):
            ray_next(t, 99)
        with pytest.raises(UnknownNode):
            horodistance(t, 0, 99)

    def test_non_root_degree(self):
        t = sample_tree(REGULAR, AGW, 1)
        c = children(t, 0)[2]
        assert len(children(t, c)) == 2
        assert degree(t, c) == 3

    @given(offspring_laws(), st.integers(0, 2**32), st.integers(0, 100))
    def test_links_consistent(self, d, seed, ws):
        t = sample_tree(d, AGW, seed)
        for v in set(random_walk_nodes(t, ws, 80)):
            assert degree(t, v) >= 2
            for c in children(t, v):
                assert t.parent(c) == v
                assert t.depth(c) == t.depth(v) + 1
            if v != 0:
                assert v in children(t, t.parent(v))
            assert degree(t, v) == len(t.neighbors(v))


class TestRay:
    def test_root_goes_to_leftmost_child(self):
        t = sample_tree(MIXED, AGW, 2)
        assert ray_next(t, 0) == children(t, 0)[0]

    def test_off_ray_goes_to_parent(self):
        t = sample_tree(REGULAR, AGW, 2)
        c = children(t, 0)[1]
        g = children(t, c)[0]
        assert ray_next(t, c) == 0
        assert ray_next(t, g) == c

    @given(offspring_laws(), st.integers(0, 2**32), st.integers(0, 100))
    def test_iteration_reaches_ray(self, d, seed, ws):
        t = sample_tree(d, AGW, seed)
        for v in set(random_walk_nodes(t, ws, 40)):
            path = [v]
            while not t.on_ray(path[-1]):
                path.append(ray_next(t, path[-1]))
            assert all(t.parent(a) == b for a, b in zip(path, path[1:]))
            u = path[-1]
            for _ in range(5):
                nxt = ray_next(t, u)
                assert t.on_ray(nxt) and t.parent(nxt) == u
                u = nxt


class TestHorodistance:
    def test_self(self):
        t = sample_tree(MIXED, AGW, 0)
        for v in random_walk_nodes(t, 0, 20):
            assert horodistance(t, v, v) == 0

    def test_figure(self):
        t = figure_tree()
        o, x, y = t.node_of("o"), t.node_of("x"), t.node_of("y")
        assert horodistance(t, o, x) == 0
        assert horodistance(t, x, y) == 1
        assert horodistance(t, o, t.node_of("a")) == -1
        assert horodistance(t, o, t.node_of("b")) == -2
        assert horodistance(t, o, t.node_of("d")) == 2

    def test_figure_ray_neighbour(self):
        t = figure_tree()
        assert ray_next(t, t.node_of("x")) == t.node_of("a")
        assert ray_next(t, t.node_of("o")) == t.node_of("a")

    @given(offspring_laws(), st.integers(0, 2**32), st.integers(0, 100))
    def test_neighbour_increments(self, d, seed, ws):
        t = sample_tree(d, AGW, seed)
        for v in set(random_walk_nodes(t, ws, 40)):
            incs = sorted(horodistance(t, v, u) for u in t.neighbors(v))
            k = degree(t, v)
            assert incs == [-1] + [1] * (k - 1)
            assert sum(incs) == k - 2
            nxt = ray_next(t, v)
            assert horodistance(t, v, nxt) == -1

    @given(offspring_laws(), st.integers(0, 2**32), st.integers(0, 100))
    def test_cocycle_and_antisymmetry(self, d, seed, ws):
        t = sample_tree(d, AGW, seed)
        nodes = sorted(set(random_walk_nodes(t, ws, 40)))[:12]
        for x, y, z in itertools.product(nodes, repeat=3):
            assert horodistance(t, x, z) == horodistance(t, x, y) + horodistance(t, y, z)
        for x, y in itertools.product(nodes, repeat=2):
            assert horodistance(t, x, y) == -horodistance(t, y, x)

    @given(offspring_laws(), st.integers(0, 2**32), st.integers(0, 100))
    def test_agrees_with_meeting_point_definition(self, d, seed, ws):
        # |y - m| - |x - m| where m is the first common vertex of [x, xi] and [y, xi]
        t = sample_tree(d, AGW, seed)
        nodes = sorted(set(random_walk_nodes(t, ws, 30)))[:10]

        def to_ray(v):
            path = [v]
            while not t.on_ray(path[-1]):
                path.append(ray_next(t, path[-1]))
            return path

        for x, y in itertools.product(nodes, repeat=2):
            px, py = to_ray(x), to_ray(y)
            while len(px) < 60:
                px.append(ray_next(t, px[-1]))
            while len(py) < 60:
                py.append(ray_next(t, py[-1]))
            m = next(v for v in px if v in set(py))
            assert horodistance(t, x, y) == py.index(m) - px.index(m)


def brute_isomorphic(a, b):
    if a.n != b.n:
        return False
    target = {frozenset(e) for e in b.edges}
    for perm in itertools.permutations(range(b.n)):
        if perm[a.root] != b.root:
            continue
        if {frozenset((perm[u], perm[v])) for u, v in a.edges} == target:
            return True
    return False


class TestBallCodes:
    def test_radius_zero_uncolored(self):
        codes = {canonical_ball_code(sample_tree(MIXED, AGW, s), None, 0, 0) for s in range(20)}
        assert len(codes) == 1

    def test_radius_zero_colored(self):
        t = sample_tree(REGULAR, AGW, 0)
        assert canonical_ball_code(t, {0: 1}, 0, 0) != canonical_ball_code(t, {0: 0}, 0, 0)

    @given(st.integers(0, 2**32), st.integers(0, 2**32), st.integers(0, 4))
    def test_regular_balls_agree(self, s1, s2, r):
        a, b = sample_tree(REGULAR, AGW, s1), sample_tree(REGULAR, AGW, s2)
        assert canonical_ball_code(a, None, 0, r) == canonical_ball_code(b, None, 0, r)

    def test_negative_radius(self):
        with pytest.raises(ValueError):
            canonical_ball_code(sample_tree(REGULAR, AGW, 0), None, 0, -1)

    def test_matches_brute_force_isomorphism(self):
        corpus = [t for n in range(1, 7) for t in rooted_trees(n)]
        # also add relabelled copies so equal codes are exercised across labelings
        rng = np.random.default_rng(0)
        extra = []
        for t in corpus:
            perm = rng.permutation(t.n)
            extra.append(FiniteTree(t.n, tuple((int(perm[a]), int(perm[b])) for a, b in t.edges),
                                    int(perm[t.root])))
        corpus += extra

        def code(ft):
            lt = LazyTree.frozen(ft.children(), root=ft.root)
            return canonical_ball_code(lt, None, lt.node_of(ft.root), ft.n)

        codes = [code(t) for t in corpus]
        for i, j in itertools.combinations(range(len(corpus)), 2):
            if corpus[i].n != corpus[j].n:
                assert codes[i] != codes[j]
                continue
            assert (codes[i] == codes[j]) == brute_isomorphic(corpus[i], corpus[j])

    @given(st.lists(st.integers(0, 3), min_size=1, max_size=7), st.randoms(use_true_random=False),
           st.integers(0, 3))
    def test_child_order_invariance(self, shape, rnd, r):
        # tree grown from a shape list: node i gets shape[i] children while nodes last
        kids, nxt = {0: []}, 1
        for i, k in enumerate(shape):
            if i not in kids:
                break
            for _ in range(k):
                kids[i].append(nxt)
                kids[nxt] = []
                nxt += 1
        colors = {v: rnd.randint(0, 1) for v in kids}
        shuffled = {v: rnd.sample(c, len(c)) for v, c in kids.items()}
        a = LazyTree.frozen(kids, root=0)
        b = LazyTree.frozen(shuffled, root=0)
        ca = {a.node_of(v): c for v, c in colors.items()}
        cb = {b.node_of(v): c for v, c in colors.items()}
        assert canonical_ball_code(a, ca, 0, r) == canonical_ball_code(b, cb, 0, r)
        for v in kids:
            assert (canonical_ball_code(a, ca, a.node_of(v), r)
                    == canonical_ball_code(b, cb, b.node_of(v), r))
