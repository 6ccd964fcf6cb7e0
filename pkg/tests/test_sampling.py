import itertools
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from msimap.errors import DegenerateInputError, ParameterError
from msimap.graph import SparseGraph
from msimap.sampling import (
    edge_betweenness,
    kde_fit,
    node_importance_sgw,
    node_probabilities_sgw,
    sample_edges_ebc,
    silverman_bandwidth,
)
from msimap.sgw import SgwTensor

from conftest import random_connected


def brute_force_ebc(graph):
    """Fraction of shortest paths through each edge, summed over unordered pairs,
    by explicit enumeration of every shortest path (lengths 1 / w)."""
    n = graph.n_nodes
    adj = {v: {} for v in range(n)}
    for i, j, w in zip(graph.rows.tolist(), graph.cols.tolist(), graph.weights.tolist()):
        adj[i][j] = adj[j][i] = 1.0 / w
    # Floyd-Warshall distances
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0)
    for i in adj:
        for j, ln in adj[i].items():
            dist[i, j] = ln
    for m in range(n):
        dist = np.minimum(dist, dist[:, m, None] + dist[None, m, :])
    out = {}
    tol = 1e-10
    for s, t in itertools.combinations(range(n), 2):
        if not np.isfinite(dist[s, t]):
            continue
        paths = []

        def walk(v, path):
            if v == t:
                paths.append(list(path))
                return
            for u, ln in adj[v].items():
                if abs(dist[s, v] + ln + dist[u, t] - dist[s, t]) <= tol * dist[s, t]:
                    path.append(u)
                    walk(u, path)
                    path.pop()

        walk(s, [s])
        for p in paths:
            for a, b in zip(p, p[1:]):
                key = (min(a, b), max(a, b))
                out[key] = out.get(key, 0.0) + 1.0 / len(paths)
    return np.array([out.get((i, j), 0.0) for i, j in zip(graph.rows.tolist(), graph.cols.tolist())])


def two_cliques():
    a = list(itertools.combinations(range(10), 2))
    b = [(i + 10, j + 10) for i, j in a]
    return SparseGraph.from_edges(20, a + b + [(9, 10)])


class TestEbc:
    def test_k3(self):
        g = SparseGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
        assert np.allclose(edge_betweenness(g).w_be, 1.0)

    def test_star(self):
        g = SparseGraph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
        assert np.allclose(edge_betweenness(g).w_be, 3.0)

    def test_tied_paths_reference(self):
        # edge lengths (1/w) chosen so several pairs have 2 or 3 tied shortest paths;
        # values from exact rational path enumeration
        lengths = {(0, 1): 1, (1, 2): 2, (0, 2): 3, (2, 3): 1, (1, 3): 3, (3, 4): 1, (2, 4): 2}
        g = SparseGraph.from_edges(5, list(lengths), [1.0 / v for v in lengths.values()])
        expect = {(0, 1): Fraction(83, 30), (1, 2): Fraction(17, 5), (0, 2): Fraction(37, 30),
                  (2, 3): Fraction(17, 5), (1, 3): Fraction(41, 30), (3, 4): Fraction(83, 30),
                  (2, 4): Fraction(37, 30)}
        got = dict(zip(zip(g.rows.tolist(), g.cols.tolist()), edge_betweenness(g).w_be))
        for e, v in expect.items():
            assert got[e] == pytest.approx(float(v), abs=1e-12)

    def test_disconnected_pairs_ignored(self):
        g = SparseGraph.from_edges(4, [(0, 1), (2, 3)])
        assert np.allclose(edge_betweenness(g).w_be, 1.0)

    def test_matches_networkx(self):
        g = random_connected(40, 0.15, 7)
        G = nx.Graph()
        for i, j, w in zip(g.rows.tolist(), g.cols.tolist(), g.weights.tolist()):
            G.add_edge(i, j, length=1.0 / w)
        ref = nx.edge_betweenness_centrality(G, normalized=False, weight="length")
        got = edge_betweenness(g).w_be
        for e, (i, j) in enumerate(zip(g.rows.tolist(), g.cols.tolist())):
            assert got[e] == pytest.approx(ref.get((i, j), ref.get((j, i))), rel=1e-9)

    @given(st.integers(2, 12), st.floats(0.0, 0.6), st.integers(0, 100_000))
    def test_brute_force_small(self, n, p, seed):
        g = random_connected(n, p, seed)
        assert np.allclose(edge_betweenness(g).w_be, brute_force_ebc(g), atol=1e-9, rtol=0)

    @given(st.integers(3, 12), st.integers(0, 100_000), st.floats(0.01, 100))
    def test_length_scale_invariance(self, n, seed, c):
        g = random_connected(n, 0.3, seed)
        h = SparseGraph(g.n_nodes, g.rows, g.cols, g.weights * c)
        assert np.allclose(edge_betweenness(g).w_be, edge_betweenness(h).w_be, atol=1e-9)

    def test_unit_weight_integers_on_trees(self):
        # on a tree each edge separates the nodes into sides a, b and carries a*b pairs
        g = SparseGraph.from_edges(5, [(0, 1), (1, 2), (1, 3), (3, 4)])
        assert np.allclose(edge_betweenness(g).w_be, [4, 4, 6, 4])

    def test_pivot_approximation(self):
        g = random_connected(120, 0.05, 3)
        exact = edge_betweenness(g).w_be
        approx = edge_betweenness(g, exact_limit=50, n_pivots=60)
        assert not approx.exact
        assert np.corrcoef(exact, approx.w_be)[0, 1] > 0.8


class TestKde:
    def test_mass_concentration(self):
        d = kde_fit([0, 0, 0, 1])
        assert d(0.0)[0] > d(1.0)[0]

    def test_symmetric(self):
        d = kde_fit([-1, 1])
        x = np.linspace(0, 3, 7)
        assert np.allclose(d(x), d(-x), atol=1e-9)

    def test_standard_normal(self):
        v = np.random.default_rng(0).standard_normal(1000)
        assert abs(kde_fit(v)(0.0)[0] - 0.3989) < 0.08

    def test_silverman_reference(self):
        # 0.9 min(std, IQR/1.34) n^(-1/5), computed at 40 digits
        assert silverman_bandwidth([1, 2, 2, 3, 7, 11, 12]) == pytest.approx(2.7915125990652648, rel=1e-12)

    def test_iqr_zero_uses_std(self):
        v = [0, 0, 0, 0, 0, 0, 5]
        assert silverman_bandwidth(v) == pytest.approx(0.9 * np.std(v, ddof=1) * 7 ** -0.2)

    def test_integrates_to_one(self):
        d = kde_fit([0.0, 0.5, 3.0])
        x = np.linspace(-10, 13, 20001)
        assert np.trapezoid(d(x), x) == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("v", [[1.0], [2.0, 2.0, 2.0]])
    def test_degenerate(self, v):
        with pytest.raises(DegenerateInputError):
            kde_fit(v)


class TestEdgeSampling:
    def test_bridge_sampled_below_uniform(self):
        g = two_cliques()
        plan = sample_edges_ebc(g, 10_000, seed=0)
        bridge = int(np.flatnonzero((g.rows == 9) & (g.cols == 10))[0])
        freq = np.mean(plan.edge_ids == bridge)
        assert freq < 1.0 / g.n_edges
        assert not plan.uniform_fallback

    def test_single_edge(self):
        g = SparseGraph.from_edges(2, [(0, 1)])
        plan = sample_edges_ebc(g, 50, seed=1)
        assert plan.uniform_fallback
        assert plan.counts().tolist() == [[0, 1, 50]]

    def test_ring_uniform_fallback(self):
        n = 30
        g = SparseGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])
        plan = sample_edges_ebc(g, 10_000, seed=2)
        assert plan.uniform_fallback
        counts = np.bincount(plan.edge_ids, minlength=n)
        p = 1 / n
        sd = np.sqrt(10_000 * p * (1 - p))
        assert np.all(np.abs(counts - 10_000 * p) <= 3 * sd + 1)

    def test_reproducible(self):
        g = random_connected(30, 0.2, 9)
        a = sample_edges_ebc(g, 500, seed=4).edge_ids
        b = sample_edges_ebc(g, 500, seed=4).edge_ids
        assert np.array_equal(a, b)

    def test_frequencies_follow_density(self):
        from scipy.stats import chisquare

        from msimap.sampling import ebc_probabilities

        g = random_connected(25, 0.2, 11)
        p, _ = ebc_probabilities(g)
        plan = sample_edges_ebc(g, 10_000, seed=5)
        obs = np.bincount(plan.edge_ids, minlength=g.n_edges)
        assert chisquare(obs, p * 10_000).pvalue > 0.001

    def test_errors(self):
        with pytest.raises(ParameterError):
            sample_edges_ebc(SparseGraph.from_edges(3, []), 5)
        with pytest.raises(ParameterError):
            sample_edges_ebc(SparseGraph.from_edges(2, [(0, 1)]), -1)


class TestNodeImportance:
    def test_zero_tensor(self):
        assert np.all(node_importance_sgw(SgwTensor(np.zeros((3, 2, 5)), np.ones(2), 1.0)) == 0)

    def test_single_nonzero_column(self):
        c = np.zeros((3, 2, 6))
        c[:, :, 4] = 0.1
        v = node_importance_sgw(SgwTensor(c, np.ones(2), 1.0))
        assert np.argmax(v) == 4 and np.sum(v == v.max()) == 1

    def test_permutation_equivariant(self, rng):
        c = rng.normal(size=(3, 2, 9))
        perm = rng.permutation(9)
        a = node_importance_sgw(SgwTensor(c, np.ones(2), 1.0))
        b = node_importance_sgw(SgwTensor(c[:, :, perm], np.ones(2), 1.0))
        assert np.allclose(a[perm], b)

    def test_probabilities(self, rng):
        p = node_probabilities_sgw(SgwTensor(rng.normal(size=(3, 2, 50)), np.ones(2), 1.0))
        assert p.sum() == pytest.approx(1.0) and np.all(p > 0)
        q = node_probabilities_sgw(SgwTensor(np.ones((2, 1, 4)), np.ones(1), 1.0))
        assert np.allclose(q, 0.25)
