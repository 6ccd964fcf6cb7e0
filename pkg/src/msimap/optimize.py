"""Contrastive SGD refinement of SGW embeddings.

Positive samples are graph edges (attraction), negative samples are
uniformly drawn nodes (repulsion). For an embedded pair at squared distance
``d2`` with similarity ``v = 1 / (1 + d2)``, an edge of weight ``w`` pulls
each endpoint by ``lr * w * v * diff`` and a negative pushes the head away
by ``lr * v * diff / max(d2, min_dist_eps)``. Each coordinate update is
clipped to ``[-clip, clip]``.

Both methods run the same kernel on an (N, n_slices, slice_dim) array:
Method 1 is one slice of K*D dimensions, Method 2 is K slices of D
dimensions that share every sampled pair and are summed at the end.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numba
import numpy as np

from .encode import EncodedMethod1, EncodedMethod2
from .errors import ParameterError
from .graph import SparseGraph
from .sampling import (
    CentralityGraph,
    ebc_probabilities,
    node_probabilities_sgw,
    weight_probabilities,
)

logger = logging.getLogger(__name__)

METHOD1 = "method1"
METHOD2 = "method2"
WEIGHT_SAMPLER = "weight"
EBC_SAMPLER = "ebc"
UNIFORM_NEGATIVES = "uniform"
SGW_NEGATIVES = "sgw_kde"


@dataclass(frozen=True)
class OptimizerConfig:
    epochs: int = 1000
    initial_lr: float = 1.0
    negatives_per_positive: int = 5
    min_dist_eps: float = 1e-3
    clip: float = 4.0
    seed: int = 0
    sampler_kind: str = WEIGHT_SAMPLER
    negative_kind: str = UNIFORM_NEGATIVES
    deterministic: bool = True

    def __post_init__(self):
        if self.epochs < 0:
            raise ParameterError("epochs must be >= 0")
        if not self.initial_lr > 0:
            raise ParameterError("initial_lr must be positive")
        if self.negatives_per_positive < 1:
            raise ParameterError("negatives_per_positive must be >= 1")
        if not self.min_dist_eps > 0:
            raise ParameterError("min_dist_eps must be positive")
        if not self.clip > 0:
            raise ParameterError("clip must be positive")
        if self.sampler_kind not in (WEIGHT_SAMPLER, EBC_SAMPLER):
            raise ParameterError(f"unknown sampler_kind {self.sampler_kind!r}")
        if self.negative_kind not in (UNIFORM_NEGATIVES, SGW_NEGATIVES):
            raise ParameterError(f"unknown negative_kind {self.negative_kind!r}")

    def digest(self) -> str:
        text = ",".join(f"{k}={v}" for k, v in sorted(asdict(self).items()))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class Embedding:
    """Optimized embedding; ``matrix`` has one row per output dimension, one column per node."""

    kind: str
    matrix: np.ndarray  # (n_dims, N)
    config: OptimizerConfig
    slices: Optional[np.ndarray] = None  # Method 2 only: optimized (K, D, N) tensor
    n_bands: int = 1
    n_features: int = 0
    feature_names: Optional[tuple] = None
    provenance: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_dims(self) -> int:
        return self.matrix.shape[0]

    @property
    def points(self) -> np.ndarray:
        """Node-major view (N, n_dims) for clustering and export."""
        return np.ascontiguousarray(self.matrix.T)


def embedding_similarity(a, b) -> float:
    """``1 / (1 + ||a - b||^2)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ParameterError("vectors must have equal length")
    d = a - b
    return 1.0 / (1.0 + float(d @ d))


def _pair_loss(w, d2, eps):
    v = 1.0 / (1.0 + np.maximum(d2, eps))
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = np.where(w > 0, w * np.log(np.where(w > 0, w, 1.0) / v), 0.0)
        neg = np.where(w < 1, (1 - w) * np.log(np.where(w < 1, 1 - w, 1.0) / (1 - v)), 0.0)
    return pos + neg


def fuzzy_cross_entropy(coords, graph: SparseGraph, min_dist_eps: float = 1e-3,
                        n_negative_pairs: Optional[int] = None, seed=0) -> float:
    """Fuzzy cross entropy between edge weights and embedding similarities.

    ``coords`` is node-major (N, dims). Summed over unordered node pairs;
    exact for N <= 500, otherwise every edge plus a uniform sample of
    non-edge pairs rescaled to the full count.
    """
    y = np.asarray(coords, dtype=float)
    n = y.shape[0]
    if n != graph.n_nodes:
        raise ParameterError(f"embedding has {n} nodes, graph has {graph.n_nodes}")
    if n_negative_pairs is None and n <= 500:
        iu, ju = np.triu_indices(n, 1)
        w = np.asarray(graph.adjacency[iu, ju]).ravel()
        d2 = np.sum((y[iu] - y[ju]) ** 2, axis=1)
        return float(_pair_loss(w, d2, min_dist_eps).sum())

    rows, cols, w = graph.rows, graph.cols, graph.weights
    d2 = np.sum((y[rows] - y[cols]) ** 2, axis=1)
    total = float(_pair_loss(w, d2, min_dist_eps).sum())
    rng = np.random.default_rng(seed)
    n_pairs = n_negative_pairs or 100_000
    i = rng.integers(0, n, n_pairs)
    j = rng.integers(0, n - 1, n_pairs)
    j += j >= i
    keep = np.asarray(graph.adjacency[i, j]).ravel() == 0
    d2 = np.sum((y[i[keep]] - y[j[keep]]) ** 2, axis=1)
    n_nonedge = n * (n - 1) // 2 - graph.n_edges
    if keep.sum():
        total += float(_pair_loss(np.zeros(d2.size), d2, min_dist_eps).mean()) * n_nonedge
    return total


def cross_entropy_loss(emb: Embedding, graph: SparseGraph, **kwargs) -> float:
    """Loss of an embedding; for Method 2 summed over the optimized scale slices."""
    if emb.kind == METHOD2 and emb.slices is not None:
        return sum(fuzzy_cross_entropy(s.T, graph, emb.config.min_dist_eps, **kwargs) for s in emb.slices)
    return fuzzy_cross_entropy(emb.points, graph, emb.config.min_dist_eps, **kwargs)


def attraction_gradient(yi, yj, w):
    """Attraction part of the per-pair gradient with respect to ``yi``."""
    diff = np.asarray(yi, dtype=float) - np.asarray(yj, dtype=float)
    v = 1.0 / (1.0 + diff @ diff)
    return w * v * diff


def repulsion_gradient(yi, ym, min_dist_eps=1e-3):
    """Repulsion part of the per-pair gradient with respect to ``yi`` (descent moves away from ``ym``)."""
    diff = np.asarray(yi, dtype=float) - np.asarray(ym, dtype=float)
    d2 = diff @ diff
    v = 1.0 / (1.0 + d2)
    return -v * diff / max(d2, min_dist_eps)


def _sgd_kernel(y, heads, tails, weights, negatives, lr, eps, clip):
    n_samples = heads.shape[0]
    n_slices = y.shape[1]
    dim = y.shape[2]
    n_neg = negatives.shape[1]
    for s in numba.prange(n_samples):
        i = heads[s]
        j = tails[s]
        w = weights[s]
        for k in range(n_slices):
            d2 = 0.0
            for c in range(dim):
                diff = y[i, k, c] - y[j, k, c]
                d2 += diff * diff
            coef = w / (1.0 + d2)
            for c in range(dim):
                step = lr * coef * (y[i, k, c] - y[j, k, c])
                step = min(max(step, -clip), clip)
                y[i, k, c] -= step
                y[j, k, c] += step
            for q in range(n_neg):
                m = negatives[s, q]
                d2 = 0.0
                for c in range(dim):
                    diff = y[i, k, c] - y[m, k, c]
                    d2 += diff * diff
                coef = 1.0 / ((1.0 + d2) * max(d2, eps))
                for c in range(dim):
                    step = lr * coef * (y[i, k, c] - y[m, k, c])
                    step = min(max(step, -clip), clip)
                    y[i, k, c] += step


_sgd_serial = numba.njit(cache=True)(_sgd_kernel)
# lock-free updates; concurrent writes to shared rows are tolerated
_sgd_parallel = numba.njit(parallel=True)(_sgd_kernel)


def sgd_step(y, i, j, w, negatives, lr, min_dist_eps=1e-3, clip=4.0):
    """One positive pair plus its negatives, applied in place to ``y``.

    ``y`` is (N, dims) for Method 1 or (N, K, D) for Method 2; ``y`` is
    returned for convenience.
    """
    if i == j:
        raise ParameterError("positive pair must join distinct nodes")
    negatives = np.atleast_1d(np.asarray(negatives, dtype=np.int64))
    if np.any(negatives == i):
        raise ParameterError("negatives must exclude the head node")
    view = y[:, None, :] if y.ndim == 2 else y
    _sgd_serial(view, np.array([i], dtype=np.int64), np.array([j], dtype=np.int64),
                np.array([w], dtype=float), negatives[None, :], float(lr), float(min_dist_eps), float(clip))
    return y


def edge_probabilities(graph: SparseGraph, kind: str, centrality: Optional[CentralityGraph] = None):
    if kind == WEIGHT_SAMPLER:
        return weight_probabilities(graph)
    p, fallback = ebc_probabilities(graph, centrality)
    if fallback:
        logger.info("EBC values are degenerate; sampling edges uniformly")
    return p


def _run(y, graph: SparseGraph, cfg: OptimizerConfig, edge_p=None, node_p=None):
    if graph.n_edges < 1:
        raise ParameterError("graph has no edges")
    n = y.shape[0]
    if n != graph.n_nodes:
        raise ParameterError(f"embedding has {n} nodes, graph has {graph.n_nodes}")
    if cfg.epochs == 0:
        return y
    if edge_p is None:
        edge_p = edge_probabilities(graph, cfg.sampler_kind)
    if node_p is not None and cfg.negative_kind == SGW_NEGATIVES:
        node_cdf = np.cumsum(node_p)
        node_cdf /= node_cdf[-1]
    else:
        node_cdf = None
    kernel = _sgd_serial if cfg.deterministic else _sgd_parallel
    rng = np.random.default_rng(cfg.seed)
    m = graph.n_edges
    rows, cols, weights = graph.rows, graph.cols, graph.weights
    for epoch in range(cfg.epochs):
        lr = cfg.initial_lr * (1.0 - epoch / cfg.epochs)
        ids = rng.choice(m, size=m, p=edge_p)
        flip = rng.random(m) < 0.5
        heads = np.where(flip, cols[ids], rows[ids])
        tails = np.where(flip, rows[ids], cols[ids])
        if node_cdf is None:
            neg = rng.integers(0, n - 1, size=(m, cfg.negatives_per_positive))
            neg += neg >= heads[:, None]
        else:
            neg = np.searchsorted(node_cdf, rng.random((m, cfg.negatives_per_positive)), side="right")
            neg = np.minimum(neg, n - 1)
            clash = neg == heads[:, None]
            neg[clash] = (neg[clash] + 1) % n
        kernel(y, heads, tails, weights[ids], neg, lr, cfg.min_dist_eps, cfg.clip)
    if not np.all(np.isfinite(y)):
        raise FloatingPointError("optimization produced non-finite coordinates")
    return y


def _provenance(cfg, method):
    return {"seed": cfg.seed, "method": method, "epochs": cfg.epochs, "config_hash": cfg.digest()}


def optimize_method1(encoded: EncodedMethod1, graph: SparseGraph, cfg: OptimizerConfig = OptimizerConfig(),
                     edge_p=None) -> Embedding:
    """Refine the flattened (K*D, N) encoding; output keeps all K*D rows."""
    y = np.ascontiguousarray(encoded.matrix.T)[:, None, :].copy()
    y = _run(y, graph, cfg, edge_p)
    return Embedding(METHOD1, np.ascontiguousarray(y[:, 0, :].T), cfg, None,
                     encoded.n_bands, encoded.n_features, encoded.feature_names, _provenance(cfg, 1))


def optimize_method2(encoded: EncodedMethod2, graph: SparseGraph, cfg: OptimizerConfig = OptimizerConfig(),
                     edge_p=None) -> Embedding:
    """Refine all K scale slices jointly, then sum them into a (D, N) embedding."""
    t = encoded.tensor
    y = np.ascontiguousarray(np.transpose(t.coeffs, (2, 0, 1))).copy()  # (N, K, D)
    node_p = node_probabilities_sgw(t) if cfg.negative_kind == SGW_NEGATIVES else None
    y = _run(y, graph, cfg, edge_p, node_p)
    slices = np.ascontiguousarray(np.transpose(y, (1, 2, 0)))  # (K, D, N)
    return Embedding(METHOD2, slices.sum(axis=0), cfg, slices,
                     t.n_bands, t.n_features, encoded.feature_names, _provenance(cfg, 2))


def optimize(encoded: Union[EncodedMethod1, EncodedMethod2], graph: SparseGraph,
             cfg: OptimizerConfig = OptimizerConfig(), edge_p=None) -> Embedding:
    if isinstance(encoded, EncodedMethod1):
        return optimize_method1(encoded, graph, cfg, edge_p)
    return optimize_method2(encoded, graph, cfg, edge_p)
