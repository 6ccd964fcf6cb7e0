"""Laplacian-score feature importance for embedding dimensions.

Every output dimension of either method is built from one input feature,
so scoring the dimensions scores the features. A low score means the
dimension varies smoothly over the graph (it lies mostly in the span of
the low-frequency Laplacian eigenvectors) and is ranked as important.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graph import COMBINATORIAL, SparseGraph, build_knn_graph, build_laplacian
from .errors import ParameterError
from .optimize import METHOD1, METHOD2, Embedding

# score given to dimensions that are constant after centering
DEGENERATE_SCORE = float(np.finfo(float).max)
DEGENERATE_NORM = 1e-12


@dataclass(frozen=True)
class FeatureImportance:
    scores: np.ndarray  # (n_dims,)
    degenerate: np.ndarray  # (n_dims,) bool
    feature_ids: np.ndarray  # (n_dims,) input feature of each dimension
    kind: str = METHOD2
    feature_names: Optional[tuple] = None

    @property
    def n_features(self) -> int:
        return int(self.feature_ids.max()) + 1 if self.feature_ids.size else 0


@dataclass(frozen=True)
class RankedFeature:
    rank: int  # 1 = most important
    feature_id: int
    name: str
    score: float
    degenerate: bool


def _dimension_scores(y, graph: SparseGraph):
    lap = build_laplacian(graph, COMBINATORIAL)
    d = lap.degrees
    total = d.sum()
    scores = np.full(y.shape[1], DEGENERATE_SCORE)
    flags = np.ones(y.shape[1], dtype=bool)
    for col in range(y.shape[1]):
        f = y[:, col]
        # degree-weighted mean removal keeps generalized eigenvectors (which
        # are D-orthogonal to the constant vector) unchanged
        f = f - (f @ d) / total if total > 0 else f - f.mean()
        if np.linalg.norm(f) < DEGENERATE_NORM * max(1.0, np.abs(y[:, col]).max()):
            continue
        den = f @ (d * f)
        if not den > 0:
            continue
        scores[col] = float(lap.quadratic_form(f) / den)
        flags[col] = False
    return scores, flags


def laplacian_score(emb, graph: Optional[SparseGraph] = None, k: int = 15) -> FeatureImportance:
    """Score every embedding dimension by ``f'Lf / f'Df`` after centering.

    ``graph`` defaults to a fresh Gaussian kNN graph on the embedding
    itself; pass the input graph to score against that instead. ``emb`` may
    be an :class:`Embedding` or a node-major (N, dims) array.
    """
    if isinstance(emb, Embedding):
        y = emb.points
        kind = emb.kind
        names = emb.feature_names
        if kind == METHOD1:
            n_feat = emb.n_features or y.shape[1]
            feature_ids = np.arange(y.shape[1]) % n_feat
        else:
            feature_ids = np.arange(y.shape[1])
    else:
        y = np.asarray(emb, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        kind, names = METHOD2, None
        feature_ids = np.arange(y.shape[1])
    if graph is None:
        graph = build_knn_graph(y, k=min(k, y.shape[0] - 1))
    if graph.n_nodes != y.shape[0]:
        raise ParameterError(f"embedding has {y.shape[0]} nodes, graph has {graph.n_nodes}")
    scores, flags = _dimension_scores(y, graph)
    return FeatureImportance(scores, flags, feature_ids, kind, names)


def feature_scores(importance: FeatureImportance):
    """Per input feature ``(score, degenerate)``; Method 1 keeps the best (minimum) scale row."""
    n = importance.n_features
    scores = np.full(n, DEGENERATE_SCORE)
    flags = np.ones(n, dtype=bool)
    for dim, r in enumerate(importance.feature_ids):
        if not importance.degenerate[dim] and importance.scores[dim] < scores[r]:
            scores[r] = importance.scores[dim]
            flags[r] = False
    return scores, flags


def rank_features(importance: FeatureImportance) -> list[RankedFeature]:
    """Features sorted by ascending score (most important first), ties by feature index."""
    scores, flags = feature_scores(importance)
    order = np.lexsort((np.arange(scores.size), scores))
    names = importance.feature_names
    return [
        RankedFeature(pos + 1, int(r), names[r] if names else f"f{r}", float(scores[r]), bool(flags[r]))
        for pos, r in enumerate(order)
    ]
