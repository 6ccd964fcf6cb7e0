import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, strategies as st

from msimap.graph import build_knn_graph, build_laplacian
from msimap.interpret import DEGENERATE_SCORE, laplacian_score, rank_features
from msimap.optimize import METHOD1, Embedding, OptimizerConfig

from conftest import random_connected


def generalized_pairs(graph):
    lap = build_laplacian(graph)
    return sla.eigh(lap.matrix.toarray(), np.diag(lap.degrees))


def test_generalized_eigenvectors_score_their_eigenvalue():
    g = random_connected(150, 0.05, 3)
    vals, vecs = generalized_pairs(g)
    imp = laplacian_score(vecs[:, 1:], g)
    assert np.allclose(imp.scores, vals[1:], atol=1e-6)


def test_scores_bounded(rng):
    g = random_connected(60, 0.1, 1)
    imp = laplacian_score(rng.normal(size=(60, 8)), g)
    assert np.all(imp.scores >= 0) and np.all(imp.scores <= 2)


def test_constant_dimension_flagged(rng):
    y = np.column_stack([rng.normal(size=30), np.full(30, 4.2)])
    imp = laplacian_score(y, random_connected(30, 0.2, 2))
    assert imp.degenerate.tolist() == [False, True]
    assert imp.scores[1] == DEGENERATE_SCORE
    ranked = rank_features(imp)
    assert ranked[-1].feature_id == 1 and ranked[-1].degenerate


@given(st.floats(-1e3, 1e3).filter(lambda c: abs(c) > 1e-3), st.integers(0, 5))
def test_scale_invariance(c, col):
    y = np.random.default_rng(7).normal(size=(40, 6))
    g = random_connected(40, 0.15, 7)
    base = laplacian_score(y, g)
    y2 = y.copy()
    y2[:, col] *= c
    scaled = laplacian_score(y2, g)
    assert np.allclose(base.scores, scaled.scores, rtol=1e-9)
    assert [r.feature_id for r in rank_features(base)] == [r.feature_id for r in rank_features(scaled)]


def test_fiedler_direction_ranked_first(rng):
    g = random_connected(80, 0.05, 5)
    _, vecs = generalized_pairs(g)
    y = np.column_stack([rng.normal(size=80), vecs[:, 1]])
    ranked = rank_features(laplacian_score(y, g))
    assert ranked[0].feature_id == 1


def test_duplicate_columns_tie_by_index(rng):
    f = rng.normal(size=25)
    ranked = rank_features(laplacian_score(np.column_stack([f, f]), random_connected(25, 0.2, 3)))
    assert [r.feature_id for r in ranked] == [0, 1]
    assert ranked[0].score == ranked[1].score


def test_single_feature():
    ranked = rank_features(laplacian_score(np.arange(10.0), random_connected(10, 0.3, 1)))
    assert len(ranked) == 1 and ranked[0].rank == 1


def test_default_graph_is_embedding_knn(rng):
    y = rng.normal(size=(50, 2))
    a = laplacian_score(y)
    b = laplacian_score(y, build_knn_graph(y, 15))
    assert np.array_equal(a.scores, b.scores)


def test_method1_min_over_scale_rows(rng):
    # 3 bands, 2 features; rows are band-major
    g = random_connected(40, 0.1, 4)
    _, vecs = generalized_pairs(g)
    m = rng.normal(size=(6, 40))
    m[4] = vecs[:, 1]  # band 2, feature 0 is very smooth
    emb = Embedding(METHOD1, m, OptimizerConfig(), n_bands=3, n_features=2, feature_names=("x", "y"))
    imp = laplacian_score(emb, g)
    assert imp.feature_ids.tolist() == [0, 1, 0, 1, 0, 1]
    ranked = rank_features(imp)
    assert ranked[0].name == "x"
    assert ranked[0].score == pytest.approx(imp.scores[[0, 2, 4]].min())
