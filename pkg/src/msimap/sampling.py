"""Topology-aware sampling of positive edges and nodes.

Edges are scored by edge betweenness centrality (EBC) with path length
``1 / w_ij``; a Gaussian KDE of the EBC values then gives each edge a
sampling probability proportional to the density at its own EBC value, so
the bulk of low-EBC edges inside clusters is drawn often and the few
high-EBC bridge edges rarely.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .errors import DegenerateInputError, ParameterError
from .graph import SparseGraph
from .sgw import SgwTensor

logger = logging.getLogger(__name__)

EXACT_EBC_LIMIT = 5000
N_PIVOTS = 256
# relative tolerance for treating two path lengths as equal
PATH_TOL = 1e-10


@numba.njit(cache=True)
def _accumulate_source(src, dist, indptr, indices, lengths, edge_of, ebc):
    n = dist.shape[0]
    order = np.argsort(dist)
    sigma = np.zeros(n)
    delta = np.zeros(n)
    sigma[src] = 1.0
    n_reach = 0
    for v in order:
        if not np.isfinite(dist[v]):
            break
        n_reach += 1
    # path counts in order of increasing distance
    for a in range(n_reach):
        v = order[a]
        for p in range(indptr[v], indptr[v + 1]):
            w = indices[p]
            if dist[w] > dist[v] and abs(dist[v] + lengths[p] - dist[w]) <= PATH_TOL * dist[w]:
                sigma[w] += sigma[v]
    # dependency accumulation in order of decreasing distance
    for a in range(n_reach - 1, 0, -1):
        w = order[a]
        for p in range(indptr[w], indptr[w + 1]):
            v = indices[p]
            if dist[v] < dist[w] and abs(dist[v] + lengths[p] - dist[w]) <= PATH_TOL * dist[w]:
                c = sigma[v] / sigma[w] * (1.0 + delta[w])
                ebc[edge_of[p]] += c
                delta[v] += c


@numba.njit(cache=True)
def _accumulate_block(sources, dists, indptr, indices, lengths, edge_of, ebc):
    for b in range(sources.shape[0]):
        _accumulate_source(sources[b], dists[b], indptr, indices, lengths, edge_of, ebc)


@dataclass(frozen=True)
class CentralityGraph:
    base: SparseGraph
    w_be: np.ndarray  # per edge, aligned with base.rows / base.cols
    exact: bool = True


def edge_betweenness(
    graph: SparseGraph,
    exact_limit: int = EXACT_EBC_LIMIT,
    n_pivots: int = N_PIVOTS,
    seed: int = 0,
) -> CentralityGraph:
    """Edge betweenness centrality over shortest paths with lengths ``1 / w_ij``.

    Each unordered pair of nodes {k, t} contributes the fraction of its
    shortest paths that use the edge; unreachable pairs contribute nothing.
    Above ``exact_limit`` nodes, ``n_pivots`` random sources are used and
    the result is rescaled (approximate).
    """
    n = graph.n_nodes
    m = graph.n_edges
    ebc = np.zeros(m)
    if m == 0:
        return CentralityGraph(graph, ebc)

    # CSR over both directions, carrying the undirected edge id of every entry
    src = np.concatenate([graph.rows, graph.cols])
    dst = np.concatenate([graph.cols, graph.rows])
    eid = np.concatenate([np.arange(m), np.arange(m)])
    length = 1.0 / np.concatenate([graph.weights, graph.weights])
    order = np.lexsort((dst, src))
    src, dst, eid, length = src[order], dst[order], eid[order], length[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])

    lengths_csr = sp.csr_matrix((length, dst, indptr), shape=(n, n))

    exact = n <= exact_limit
    if exact:
        sources = np.arange(n)
        scale = 0.5
    else:
        rng = np.random.default_rng(seed)
        sources = np.sort(rng.choice(n, size=min(n_pivots, n), replace=False))
        scale = 0.5 * n / len(sources)

    block = max(1, min(len(sources), 2_000_000 // max(n, 1)))
    for start in range(0, len(sources), block):
        srcs = sources[start:start + block]
        dists = dijkstra(lengths_csr, directed=True, indices=srcs)
        _accumulate_block(srcs.astype(np.int64), np.ascontiguousarray(dists), indptr,
                          dst.astype(np.int64), length, eid.astype(np.int64), ebc)
    return CentralityGraph(graph, ebc * scale, exact)


def silverman_bandwidth(values) -> float:
    x = np.asarray(values, dtype=float)
    std = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(std, (q75 - q25) / 1.34)
    if spread <= 0:
        spread = std
    return 0.9 * spread * x.size ** (-0.2)


@dataclass(frozen=True)
class KdeDensity:
    """Gaussian kernel density estimate."""

    sample_values: np.ndarray
    bandwidth: float

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(x.shape)
        h = self.bandwidth
        vals = self.sample_values
        norm = 1.0 / (vals.size * h * np.sqrt(2.0 * np.pi))
        chunk = max(1, 4_000_000 // vals.size)
        flat = x.ravel()
        res = out.reshape(-1)
        for start in range(0, flat.size, chunk):
            z = (flat[start:start + chunk, None] - vals[None, :]) / h
            res[start:start + chunk] = norm * np.exp(-0.5 * z * z).sum(axis=1)
        return out


def kde_fit(values, bandwidth: Optional[float] = None) -> KdeDensity:
    """Gaussian KDE with Silverman's rule ``0.9 min(std, IQR/1.34) n^(-1/5)``."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size < 2:
        raise DegenerateInputError("KDE needs at least two values")
    if not np.all(np.isfinite(x)):
        raise ParameterError("KDE values must be finite")
    # equal up to rounding (e.g. centralities of a vertex-transitive graph)
    if np.ptp(x) <= 1e-10 * np.abs(x).max():
        raise DegenerateInputError("all KDE values are identical")
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise DegenerateInputError("KDE bandwidth is zero")
    return KdeDensity(x.copy(), h)


@dataclass(frozen=True)
class EdgeSamplePlan:
    """Multiset of positive edges, stored as indices into the base graph's edge list."""

    graph: SparseGraph
    edge_ids: np.ndarray
    uniform_fallback: bool = False

    @property
    def n_requested(self) -> int:
        return int(self.edge_ids.size)

    @property
    def edges(self) -> np.ndarray:
        return np.column_stack([self.graph.rows[self.edge_ids], self.graph.cols[self.edge_ids]])

    def counts(self):
        """``(i, j, count)`` rows for every edge drawn at least once."""
        ids, cnt = np.unique(self.edge_ids, return_counts=True)
        return np.column_stack([self.graph.rows[ids], self.graph.cols[ids], cnt])


def ebc_probabilities(graph: SparseGraph, centrality: Optional[CentralityGraph] = None):
    """Per-edge probabilities proportional to the KDE density at each edge's EBC.

    Returns ``(probabilities, uniform_fallback)``; the fallback is uniform
    over edges when the EBC values admit no density (all equal, one edge).
    """
    if graph.n_edges < 1:
        raise ParameterError("graph has no edges")
    if centrality is None:
        centrality = edge_betweenness(graph)
    try:
        density = kde_fit(centrality.w_be)
    except DegenerateInputError:
        return np.full(graph.n_edges, 1.0 / graph.n_edges), True
    p = density(centrality.w_be)
    return p / p.sum(), False


def weight_probabilities(graph: SparseGraph) -> np.ndarray:
    if graph.n_edges < 1:
        raise ParameterError("graph has no edges")
    return graph.weights / graph.weights.sum()


def sample_edges_ebc(graph: SparseGraph, n_e: int, seed=None,
                     centrality: Optional[CentralityGraph] = None) -> EdgeSamplePlan:
    if n_e < 0:
        raise ParameterError("n_e must be non-negative")
    p, fallback = ebc_probabilities(graph, centrality)
    rng = np.random.default_rng(seed)
    ids = rng.choice(graph.n_edges, size=n_e, p=p)
    return EdgeSamplePlan(graph, ids, fallback)


def node_importance_sgw(tensor: SgwTensor) -> np.ndarray:
    """Per-node L2 norm of the SGW coefficients across bands and features."""
    c = tensor.coeffs if isinstance(tensor, SgwTensor) else np.asarray(tensor)
    return np.sqrt(np.einsum("kdn,kdn->n", c, c))


def node_probabilities_sgw(tensor: SgwTensor) -> np.ndarray:
    """Node sampling probabilities proportional to the KDE density of :func:`node_importance_sgw`.

    Uniform when the importance values are all equal.
    """
    v = node_importance_sgw(tensor)
    try:
        p = kde_fit(v)(v)
    except DegenerateInputError:
        return np.full(v.size, 1.0 / v.size)
    return p / p.sum()
