import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from msimap.encode import encode_method1, encode_method2
from msimap.errors import ParameterError
from msimap.graph import SparseGraph
from msimap.optimize import (
    METHOD1,
    METHOD2,
    OptimizerConfig,
    attraction_gradient,
    cross_entropy_loss,
    embedding_similarity,
    fuzzy_cross_entropy,
    optimize,
    optimize_method1,
    optimize_method2,
    repulsion_gradient,
    sgd_step,
)
from msimap.sgw import SgwTensor

from conftest import random_connected


def tensor(k, d, n, seed=0, scale=1.0):
    c = scale * np.random.default_rng(seed).normal(size=(k, d, n))
    return SgwTensor(c, np.ones(k - 1), 2.0)


class TestSimilarityAndLoss:
    def test_similarity(self):
        assert embedding_similarity([1, 2], [1, 2]) == 1.0
        assert embedding_similarity([0, 0], [1, 0]) == 0.5
        assert embedding_similarity([0, 0], [3, 0]) == pytest.approx(0.1)
        with pytest.raises(ParameterError):
            embedding_similarity([0], [0, 1])

    def test_single_pair_losses(self):
        on = SparseGraph.from_edges(2, [(0, 1)], [1.0])
        y = np.array([[0.0], [1.0]])
        assert fuzzy_cross_entropy(y, on) == pytest.approx(np.log(2))
        off = SparseGraph.from_edges(2, [])
        assert fuzzy_cross_entropy(y, off) == pytest.approx(np.log(2))

    def test_zero_when_matched(self):
        # two nodes, w equal to the embedding similarity
        y = np.array([[0.0, 0.0], [0.6, 0.8]])
        g = SparseGraph.from_edges(2, [(0, 1)], [0.5])
        assert fuzzy_cross_entropy(y, g) == pytest.approx(0.0, abs=1e-12)

    def test_coincident_points_finite(self):
        g = random_connected(10, 0.3, 1)
        assert np.isfinite(fuzzy_cross_entropy(np.zeros((10, 2)), g))

    @given(arrays(np.float64, (12, 3), elements=st.floats(-5, 5)), arrays(np.float64, 3, elements=st.floats(-50, 50)))
    def test_translation_invariance(self, y, shift):
        g = random_connected(12, 0.3, 4)
        assert fuzzy_cross_entropy(y + shift, g) == pytest.approx(fuzzy_cross_entropy(y, g), abs=1e-9, rel=1e-9)

    def test_sampled_estimate_close(self, rng):
        g = random_connected(60, 0.1, 2)
        y = rng.normal(size=(60, 2)) * 3
        exact = fuzzy_cross_entropy(y, g)
        approx = fuzzy_cross_entropy(y, g, n_negative_pairs=200_000, seed=1)
        assert approx == pytest.approx(exact, rel=0.05)

    def test_method2_loss_sums_slices(self):
        g = random_connected(15, 0.3, 3)
        emb = optimize_method2(encode_method2(tensor(3, 2, 15)), g, OptimizerConfig(epochs=2))
        per = sum(fuzzy_cross_entropy(s.T, g) for s in emb.slices)
        assert cross_entropy_loss(emb, g) == pytest.approx(per)


class TestSgdStep:
    def test_attraction_half_step(self):
        y = np.array([[0.0], [1.0], [50.0]])
        sgd_step(y, 0, 1, 1.0, np.array([], dtype=np.int64), lr=1.0)
        assert y[0, 0] == pytest.approx(0.5) and y[1, 0] == pytest.approx(0.5)

    def test_coincident_no_attraction(self):
        y = np.array([[2.0, 1.0], [2.0, 1.0], [9.0, 9.0]])
        sgd_step(y, 0, 1, 0.7, np.array([], dtype=np.int64), lr=1.0)
        assert np.array_equal(y[:2], [[2.0, 1.0], [2.0, 1.0]])

    def test_repulsion_unit_distance(self):
        # positive pair far apart contributes ~0; negative at distance 1 pushes by 0.5
        y = np.array([[0.0], [1e6], [1.0]])
        sgd_step(y, 0, 1, 0.0, [2], lr=1.0)
        assert y[0, 0] == pytest.approx(-0.5)
        assert y[2, 0] == 1.0

    def test_clipping(self):
        # d^2 = 1e-4 is floored to 1e-3: raw step 1000 * 0.01 = 10, clipped to 4
        y = np.array([[0.0], [1e6], [0.01]])
        sgd_step(y, 0, 1, 0.0, [2], lr=1.0)
        assert y[0, 0] == pytest.approx(-4.0)

    def test_preconditions(self):
        y = np.zeros((3, 2))
        with pytest.raises(ParameterError):
            sgd_step(y, 1, 1, 1.0, [0], 1.0)
        with pytest.raises(ParameterError):
            sgd_step(y, 0, 1, 1.0, [0], 1.0)

    def test_tensor_slices_independent(self, rng):
        y = rng.normal(size=(4, 3, 2))
        ref = [y[:, k, :].copy() for k in range(3)]
        sgd_step(y, 0, 2, 0.8, [1, 3], lr=0.3)
        for k in range(3):
            sgd_step(ref[k], 0, 2, 0.8, [1, 3], lr=0.3)
            assert np.allclose(y[:, k, :], ref[k])

    @given(arrays(np.float64, (5, 2), elements=st.floats(-1e3, 1e3)))
    def test_finite_on_adversarial_input(self, y):
        y = y.copy()
        y[1] = y[0]
        sgd_step(y, 0, 1, 1.0, [1, 2, 3, 4], lr=1.0)
        assert np.all(np.isfinite(y))


def _pair_terms(y, i, j, w):
    d2 = np.sum((y[i] - y[j]) ** 2)
    v = 1 / (1 + d2)
    return -w * np.log(v), -np.log(1 - v)


class TestGradients:
    def setup_method(self):
        self.y = np.random.default_rng(3).normal(size=(5, 3))

    def _fd(self, fn, i, h=1e-6):
        g = np.zeros(self.y.shape[1])
        for c in range(self.y.shape[1]):
            yp, ym = self.y.copy(), self.y.copy()
            yp[i, c] += h
            ym[i, c] -= h
            g[c] = (fn(yp) - fn(ym)) / (2 * h)
        return g

    def test_attraction_is_half_exact_gradient(self):
        for i, j, w in [(0, 1, 0.9), (2, 4, 0.3), (3, 1, 1.0)]:
            fd = self._fd(lambda y: _pair_terms(y, i, j, w)[0], i)
            an = attraction_gradient(self.y[i], self.y[j], w)
            assert np.allclose(2 * an, fd, rtol=1e-4, atol=1e-9)

    def test_repulsion_direction(self):
        for i, m in [(0, 1), (2, 3), (4, 0)]:
            fd = self._fd(lambda y: _pair_terms(y, i, m, 0.0)[1], i)
            an = repulsion_gradient(self.y[i], self.y[m])
            assert np.all(np.sign(an) == np.sign(fd))
            assert np.allclose(2 * an, fd, rtol=1e-4)


class TestOptimize:
    def test_zero_epochs_identity(self):
        g = random_connected(20, 0.2, 1)
        t = tensor(3, 2, 20)
        e1 = optimize_method1(encode_method1(t), g, OptimizerConfig(epochs=0))
        assert np.array_equal(e1.matrix, encode_method1(t).matrix)
        e2 = optimize_method2(encode_method2(t), g, OptimizerConfig(epochs=0))
        assert np.allclose(e2.matrix, t.coeffs.sum(axis=0))

    def test_method2_dims(self):
        g = random_connected(20, 0.2, 1)
        emb = optimize(encode_method2(tensor(4, 3, 20)), g, OptimizerConfig(epochs=5))
        assert emb.kind == METHOD2 and emb.matrix.shape == (3, 20) and emb.slices.shape == (4, 3, 20)
        emb1 = optimize(encode_method1(tensor(4, 3, 20)), g, OptimizerConfig(epochs=5))
        assert emb1.kind == METHOD1 and emb1.matrix.shape == (12, 20)

    def test_method2_feature_separation(self):
        # output row r depends only on feature r's slices
        g = random_connected(20, 0.2, 5)
        t = tensor(3, 2, 20)
        c = t.coeffs.copy()
        c[:, 1, :] *= 3.0
        a = optimize_method2(encode_method2(t), g, OptimizerConfig(epochs=0))
        b = optimize_method2(encode_method2(SgwTensor(c, t.scales, 2.0)), g, OptimizerConfig(epochs=0))
        assert np.array_equal(a.matrix[0], b.matrix[0])

    def test_single_band_matches_method1(self):
        g = random_connected(25, 0.2, 6)
        t = SgwTensor(np.random.default_rng(1).normal(size=(1, 2, 25)), np.ones(0), 2.0)
        cfg = OptimizerConfig(epochs=20, seed=3)
        a = optimize_method1(encode_method1(t), g, cfg)
        b = optimize_method2(encode_method2(t), g, cfg)
        assert np.allclose(a.matrix, b.matrix)

    def test_deterministic_reruns(self):
        g = random_connected(30, 0.2, 2)
        enc = encode_method2(tensor(3, 2, 30))
        cfg = OptimizerConfig(epochs=30, seed=9)
        a = optimize(enc, g, cfg).matrix
        b = optimize(enc, g, cfg).matrix
        assert np.array_equal(a, b)

    def test_parallel_mode_finite(self):
        g = random_connected(30, 0.2, 2)
        emb = optimize(encode_method1(tensor(3, 2, 30)), g, OptimizerConfig(epochs=10, deterministic=False))
        assert np.all(np.isfinite(emb.matrix))

    def test_samplers(self):
        g = random_connected(30, 0.2, 2)
        enc = encode_method2(tensor(3, 2, 30))
        for cfg in (OptimizerConfig(epochs=5, sampler_kind="ebc"), OptimizerConfig(epochs=5, negative_kind="sgw_kde")):
            assert np.all(np.isfinite(optimize(enc, g, cfg).matrix))

    def test_provenance(self):
        g = random_connected(10, 0.2, 2)
        cfg = OptimizerConfig(epochs=3, seed=4)
        emb = optimize(encode_method1(tensor(2, 1, 10)), g, cfg)
        assert emb.provenance["seed"] == 4 and emb.provenance["config_hash"] == cfg.digest()

    def test_loss_decreases(self):
        g = random_connected(40, 0.15, 8)
        t = tensor(2, 2, 40, scale=5.0)
        before = fuzzy_cross_entropy(encode_method1(t).matrix.T, g)
        emb = optimize_method1(encode_method1(t), g, OptimizerConfig(epochs=200))
        assert fuzzy_cross_entropy(emb.points, g) < before

    def test_empty_graph_rejected(self):
        with pytest.raises(ParameterError):
            optimize(encode_method1(tensor(2, 1, 4)), SparseGraph.from_edges(4, []), OptimizerConfig(epochs=1))

    @pytest.mark.parametrize("bad", [dict(epochs=-1), dict(initial_lr=0), dict(negatives_per_positive=0),
                                     dict(min_dist_eps=0), dict(sampler_kind="x"), dict(negative_kind="x")])
    def test_config_validation(self, bad):
        with pytest.raises(ParameterError):
            OptimizerConfig(**bad)
