import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from gwex.errors import SingularSector, TooLarge
from gwex.oracle import (FiniteTree, GeneratorMatrix, bernoulli_marginals, build_generator,
                         check_detailed_balance, degree_marginals, path_tree, popcounts,
                         product_measure, rooted_trees, star_tree, stationary_distribution,
                         tagged_position_distribution, transient_distribution, tree_corpus)

CORPUS = tree_corpus(2, 5)
EDGE = path_tree(2)
STAR = star_tree(3)


def bits(*occupied):
    return sum(1 << v for v in occupied)


class TestTrees:
    def test_rooted_tree_counts(self):
        # number of rooted unlabeled trees on n vertices: 1, 1, 2, 4, 9, 20
        assert [len(rooted_trees(n)) for n in range(1, 7)] == [1, 1, 2, 4, 9, 20]

    def test_cycle_rejected(self):
        with pytest.raises(ValueError):
            FiniteTree(3, ((0, 1), (1, 0)))

    def test_children_cover_tree(self):
        for ft in CORPUS:
            kids = ft.children()
            assert sum(len(c) for c in kids.values()) == ft.n - 1


class TestGenerator:
    def test_single_edge_variable(self):
        Q = build_generator(EDGE, "variable").Q
        off = {(i, j): Q[i, j] for i in range(4) for j in range(4) if i != j and Q[i, j] != 0}
        assert off == {(bits(0), bits(1)): 1.0, (bits(1), bits(0)): 1.0}

    def test_single_edge_constant(self):
        Q = build_generator(EDGE, "constant").Q
        assert Q[bits(0), bits(1)] == 1.0 and Q[bits(1), bits(0)] == 1.0

    def test_star_constant(self):
        Q = build_generator(STAR, "constant").Q
        for leaf in (1, 2, 3):
            assert Q[bits(0), bits(leaf)] == pytest.approx(1 / 3)
            assert Q[bits(leaf), bits(0)] == 1.0

    def test_too_large(self):
        with pytest.raises(TooLarge):
            build_generator(path_tree(13), "variable")
        build_generator(path_tree(3), "variable", cap=3)

    def test_unknown_model(self):
        with pytest.raises(ValueError):
            build_generator(EDGE, "lazy")

    @pytest.mark.parametrize("model", ["variable", "constant"])
    def test_validity(self, model):
        for ft in CORPUS:
            g = build_generator(ft, model)
            Q = g.Q
            assert np.allclose(Q.sum(axis=1), 0.0, atol=1e-14)
            off = Q - np.diag(np.diag(Q))
            assert (off >= 0).all()
            pc = popcounts(g.n_states)
            i, j = np.nonzero(off)
            assert (pc[i] == pc[j]).all()
            # every nonzero move is a single particle crossing one edge
            edges = {frozenset(e) for e in ft.edges}
            for a, b in zip(i, j):
                moved = [v for v in range(ft.n) if ((a ^ b) >> v) & 1]
                assert frozenset(moved) in edges


class TestStationary:
    def test_single_edge(self):
        pi = stationary_distribution(build_generator(EDGE, "variable"), 1)
        assert pi[bits(0)] == pytest.approx(0.5) and pi[bits(1)] == pytest.approx(0.5)

    def test_variable_sectors_uniform(self):
        for ft in CORPUS:
            g = build_generator(ft, "variable")
            pc = popcounts(g.n_states)
            for k in range(ft.n + 1):
                pi = stationary_distribution(g, k)
                assert np.max(np.abs(pi[pc == k] - 1 / comb(ft.n, k))) <= 1e-10
                assert pi[pc != k].sum() == 0.0

    def test_star_constant_sector_one(self):
        pi = stationary_distribution(build_generator(STAR, "constant"), 1)
        w = np.array([3, 1, 1, 1]) / 6
        got = np.array([pi[bits(v)] for v in range(4)])
        assert np.max(np.abs(got - w)) <= 1e-10

    @pytest.mark.parametrize("alpha", [0.3, 1.0, 3.0])
    def test_constant_sectors_match_conditioned_product(self, alpha):
        for ft in CORPUS:
            g = build_generator(ft, "constant")
            pc = popcounts(g.n_states)
            mu = product_measure(degree_marginals(ft, alpha))
            for k in range(1, ft.n):
                pi = stationary_distribution(g, k)
                cond = np.where(pc == k, mu, 0.0)
                assert np.max(np.abs(pi - cond / cond.sum())) <= 1e-10

    def test_disconnected_sector(self):
        frozen = GeneratorMatrix(np.zeros((4, 4)), "variable", EDGE)
        with pytest.raises(SingularSector) as err:
            stationary_distribution(frozen, 1)
        assert sorted(map(sorted, err.value.components)) == [[1], [2]]

    def test_empty_sector(self):
        with pytest.raises(SingularSector):
            stationary_distribution(build_generator(EDGE, "variable"), 3)


class TestDetailedBalance:
    @pytest.mark.parametrize("rho", [0.2, 0.5, 0.8])
    def test_bernoulli_variable(self, rho):
        for ft in CORPUS:
            mu = product_measure(bernoulli_marginals(ft, rho))
            assert check_detailed_balance(build_generator(ft, "variable"), mu) <= 1e-12

    @pytest.mark.parametrize("alpha", [0.3, 1.0, 3.0])
    def test_degree_constant(self, alpha):
        for ft in CORPUS:
            mu = product_measure(degree_marginals(ft, alpha))
            assert check_detailed_balance(build_generator(ft, "constant"), mu) <= 1e-12

    def test_mismatch_detected(self):
        ft = path_tree(3)
        mu = product_measure(bernoulli_marginals(ft, 0.5))
        assert check_detailed_balance(build_generator(ft, "constant"), mu) > 1e-3

    def test_dimension_check(self):
        with pytest.raises(ValueError):
            check_detailed_balance(build_generator(EDGE, "variable"), np.ones(3))

    @given(st.sampled_from(CORPUS), st.floats(0.01, 0.99))
    def test_product_measure_normalized(self, ft, rho):
        mu = product_measure(bernoulli_marginals(ft, rho))
        assert mu.sum() == pytest.approx(1.0, abs=1e-12)
        palm = product_measure(bernoulli_marginals(ft, rho), palm_root=ft.root)
        assert palm[[s for s in range(1 << ft.n) if not (s >> ft.root) & 1]].sum() == 0.0


class TestTransient:
    def test_time_zero(self):
        g = build_generator(STAR, "constant")
        init = product_measure(degree_marginals(STAR, 1.0), 0)
        assert np.array_equal(transient_distribution(g, init, 0.0), init)

    def test_negative_time(self):
        g = build_generator(EDGE, "variable")
        with pytest.raises(ValueError):
            transient_distribution(g, np.eye(4)[1], -1.0)

    def test_long_time_single_edge(self):
        g = build_generator(EDGE, "variable")
        p = transient_distribution(g, np.eye(4)[bits(0)], 200.0)
        pi = stationary_distribution(g, 1)
        assert 0.5 * np.abs(p - pi).sum() <= 1e-6

    @given(st.sampled_from(tree_corpus(2, 4)), st.sampled_from(["variable", "constant"]),
           st.floats(0.0, 3.0))
    def test_matches_matrix_exponential(self, ft, model, t):
        g = build_generator(ft, model)
        rng = np.random.default_rng(ft.n)
        init = rng.random(g.n_states)
        init /= init.sum()
        p = transient_distribution(g, init, t)
        assert np.max(np.abs(p - init @ expm(t * g.Q))) <= 1e-10
        assert (p >= -1e-15).all()
        assert p.sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("model", ["variable", "constant"])
    def test_tagged_single_walker(self, model):
        # with no other particles the tagged particle is a plain random walk
        for ft in tree_corpus(2, 4):
            adj = np.zeros((ft.n, ft.n))
            for a, b in ft.edges:
                adj[a, b] = adj[b, a] = 1.0
            if model == "constant":
                adj = adj / adj.sum(axis=1, keepdims=True)
            L = adj - np.diag(adj.sum(axis=1))
            want = np.eye(ft.n)[ft.root] @ expm(0.7 * L)
            got = tagged_position_distribution(ft, model, np.zeros(ft.n), 0.7)
            assert np.max(np.abs(got - want)) <= 1e-10

    def test_tagged_sums_to_one(self):
        for ft in tree_corpus(2, 4):
            p = tagged_position_distribution(ft, "variable", bernoulli_marginals(ft, 0.5), 0.5)
            assert p.sum() == pytest.approx(1.0, abs=1e-12)
