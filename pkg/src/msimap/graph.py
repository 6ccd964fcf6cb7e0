"""kNN similarity graphs, graph Laplacians and spectral bounds."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.spatial import cKDTree

from .errors import DegenerateInputError, ParameterError, ParseError

logger = logging.getLogger(__name__)

COMBINATORIAL = "combinatorial"
NORMALIZED = "normalized"
LAPLACIAN_KINDS = (COMBINATORIAL, NORMALIZED)

POWER_ITERATION = "power_iteration"
LANCZOS = "lanczos"
ANALYTIC_BOUND = "analytic_bound"

# brute force up to this many points, kd-tree above
BRUTE_FORCE_LIMIT = 20_000


def check_points(points) -> np.ndarray:
    """Validate a point cloud and return it as a float (N, D) array."""
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ParameterError(f"points must be 2-D, got shape {x.shape}")
    if x.shape[0] < 2 or x.shape[1] < 1:
        raise ParameterError(f"need N >= 2 samples and D >= 1 features, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ParameterError("points contain NaN or Inf")
    return x


@dataclass(frozen=True)
class SparseGraph:
    """Undirected weighted graph without self-loops.

    Each edge is stored once with ``rows[e] < cols[e]``; the symmetric
    adjacency matrix is available as :attr:`adjacency`.
    """

    n_nodes: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    _adj: sp.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=float)
        if not (rows.shape == cols.shape == weights.shape):
            raise ParameterError("rows, cols and weights must have equal length")
        if np.any(rows >= cols):
            raise ParameterError("edges must satisfy i < j (no self-loops)")
        if rows.size and (rows.min() < 0 or cols.max() >= self.n_nodes):
            raise ParameterError("edge endpoint out of range")
        if np.any(~np.isfinite(weights)) or np.any(weights <= 0):
            raise ParameterError("edge weights must be finite and positive")
        order = np.lexsort((cols, rows))
        rows, cols, weights = rows[order], cols[order], weights[order]
        if rows.size > 1 and np.any((np.diff(rows) == 0) & (np.diff(cols) == 0)):
            raise ParameterError("duplicate edges")
        for name, arr in (("rows", rows), ("cols", cols), ("weights", weights)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        n = self.n_nodes
        adj = sp.coo_matrix(
            (np.concatenate([weights, weights]),
             (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
            shape=(n, n),
        ).tocsr()
        adj.sort_indices()
        object.__setattr__(self, "_adj", adj)

    @classmethod
    def from_adjacency(cls, adjacency) -> "SparseGraph":
        """Build from a symmetric (dense or sparse) adjacency matrix; the diagonal is ignored."""
        a = sp.coo_matrix(adjacency)
        if a.shape[0] != a.shape[1]:
            raise ParameterError("adjacency must be square")
        mask = (a.row < a.col) & (a.data != 0)
        return cls(a.shape[0], a.row[mask], a.col[mask], a.data[mask])

    @classmethod
    def from_edges(cls, n_nodes: int, edges, weights=None) -> "SparseGraph":
        """Build from an iterable of ``(i, j)`` pairs (order within a pair is irrelevant)."""
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        w = np.ones(len(e)) if weights is None else np.asarray(weights, dtype=float)
        lo, hi = np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1])
        return cls(n_nodes, lo, hi, w)

    @property
    def adjacency(self) -> sp.csr_matrix:
        return self._adj

    @property
    def n_edges(self) -> int:
        return int(self.rows.size)

    @property
    def degrees(self) -> np.ndarray:
        return np.asarray(self._adj.sum(axis=1)).ravel()

    def weight(self, i: int, j: int) -> float:
        return float(self._adj[i, j])

    def neighbors(self, i: int) -> np.ndarray:
        a = self._adj
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def unweighted(self) -> "SparseGraph":
        return SparseGraph(self.n_nodes, self.rows, self.cols, np.ones_like(self.weights))

    def n_components(self) -> int:
        return sp.csgraph.connected_components(self._adj, directed=False)[0]

    def is_connected(self) -> bool:
        return self.n_components() == 1


def knn_search(x: np.ndarray, k: int):
    """Exact k nearest neighbours of every point, excluding the point itself.

    Distance ties are broken by the smaller node index. Returns
    ``(indices, distances)``, each of shape (N, k), sorted by distance.
    """
    n = x.shape[0]
    if n <= BRUTE_FORCE_LIMIT:
        return _knn_brute(x, k)
    return _knn_tree(x, k)


def _knn_brute(x, k):
    n, d = x.shape
    idx = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k))
    block = max(1, int(4_000_000 // max(n * d, 1)))
    for start in range(0, n, block):
        stop = min(n, start + block)
        diff = x[start:stop, None, :] - x[None, :, :]
        d2 = np.einsum("bnd,bnd->bn", diff, diff)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        # stable sort keeps lower indices first among equal distances
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        idx[start:stop] = order
        dist[start:stop] = np.sqrt(np.take_along_axis(d2, order, axis=1))
    return idx, dist


def _knn_tree(x, k):
    n = x.shape[0]
    tree = cKDTree(x)
    extra = 8
    kq = min(n, k + 1 + extra)
    dq, iq = tree.query(x, k=kq)
    idx = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k))
    for i in range(n):
        cand_i, cand_d = iq[i], dq[i]
        keep = cand_i != i
        cand_i, cand_d = cand_i[keep], cand_d[keep]
        if kq < n and cand_d[-1] <= cand_d[k - 1]:
            # ties run past the queried candidates: widen to every point within range
            cand_i = np.asarray(tree.query_ball_point(x[i], cand_d[k - 1]), dtype=np.int64)
            cand_i = cand_i[cand_i != i]
            cand_d = np.linalg.norm(x[cand_i] - x[i], axis=1)
        order = np.lexsort((cand_i, cand_d))[:k]
        idx[i], dist[i] = cand_i[order], cand_d[order]
    return idx, dist


def build_knn_graph(points, k: int = 15, sigma: Optional[float] = None) -> SparseGraph:
    """Gaussian-kernel kNN similarity graph.

    Each point is linked to its ``k`` nearest neighbours with weight
    ``exp(-d^2 / (2 sigma^2))``; the directed relation is symmetrized by
    taking the larger of the two directed weights. When ``sigma`` is not
    given it is the mean distance to the k-th neighbour over all points.
    """
    x = check_points(points)
    n = x.shape[0]
    if not (1 <= k <= n - 1):
        raise ParameterError(f"k must be in [1, N-1] = [1, {n - 1}], got {k}")
    if sigma is not None and not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")

    idx, dist = knn_search(x, k)
    if sigma is None:
        sigma = float(dist[:, k - 1].mean())
        if not sigma > 0:
            raise DegenerateInputError("all points coincide; bandwidth estimate is zero (pass sigma)")
    w = np.exp(-dist**2 / (2.0 * sigma**2))
    w = np.maximum(w, np.finfo(float).tiny)

    directed = sp.coo_matrix(
        (w.ravel(), (np.repeat(np.arange(n), k), idx.ravel())), shape=(n, n)
    ).tocsr()
    sym = directed.maximum(directed.T).tocoo()
    mask = sym.row < sym.col
    return SparseGraph(n, sym.row[mask], sym.col[mask], sym.data[mask])


@dataclass(frozen=True)
class Laplacian:
    kind: str
    matrix: sp.csr_matrix
    degrees: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]

    def quadratic_form(self, f) -> float:
        f = np.asarray(f, dtype=float)
        return float(f @ (self.matrix @ f))


def build_laplacian(graph: SparseGraph, kind: str = COMBINATORIAL) -> Laplacian:
    """``D - W`` (combinatorial) or ``I - D^-1/2 W D^-1/2`` (normalized).

    Isolated nodes get an all-zero row and column under both kinds.
    """
    if kind not in LAPLACIAN_KINDS:
        raise ParameterError(f"unknown Laplacian kind {kind!r}")
    if graph.n_edges < 1:
        raise ParameterError("graph has no edges")
    w = graph.adjacency
    deg = graph.degrees
    if kind == COMBINATORIAL:
        mat = sp.diags(deg) - w
    else:
        inv_sqrt = np.zeros_like(deg)
        nz = deg > 0
        inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
        s = sp.diags(inv_sqrt)
        mat = sp.diags(nz.astype(float)) - s @ w @ s
    mat = sp.csr_matrix(mat)
    mat.sort_indices()
    return Laplacian(kind, mat, deg)


@dataclass(frozen=True)
class SpectrumBound:
    lambda_max: float
    method: str
    iterations: int = 0


def _power_iteration(m, tol, max_iter, rng):
    """Return ``(rq + residual, iterations)``, or None when not converged."""
    v = rng.standard_normal(m.shape[0])
    v /= np.linalg.norm(v)
    rq_old = 0.0
    for it in range(1, max_iter + 1):
        u = m @ v
        rq = float(v @ u)
        if rq <= 0.0:
            return 0.0, it
        if it > 1 and abs(rq - rq_old) <= tol * rq:
            # the residual norm covers part of the gap left by a still-mixed top eigenspace
            return rq + float(np.linalg.norm(u - rq * v)), it
        rq_old = rq
        v = u / np.linalg.norm(u)
    return None


def _lanczos(m, tol, max_iter, rng):
    n = m.shape[0]
    if n <= 64:
        return float(np.linalg.eigvalsh(m.toarray())[-1]), 0
    v0 = rng.standard_normal(n)
    try:
        val = spla.eigsh(m, k=1, which="LA", tol=tol, maxiter=max_iter * n, v0=v0,
                         return_eigenvectors=False)
    except spla.ArpackNoConvergence:
        return None
    return float(val[0]), 0


def estimate_lambda_max(
    lap: Laplacian,
    tol: float = 1e-4,
    max_iter: int = 200,
    inflation: float = 1.01,
    method: str = LANCZOS,
    seed: int = 0,
) -> SpectrumBound:
    """Upper bound on the largest Laplacian eigenvalue.

    The estimate from ``method`` (``"lanczos"`` or ``"power_iteration"``)
    is inflated by ``inflation``. When the iteration does not converge the
    analytic bound is returned instead: 2 for the normalized kind,
    Gershgorin ``2 max d(i)`` for the combinatorial kind.
    """
    rng = np.random.default_rng(seed)
    solver = {LANCZOS: _lanczos, POWER_ITERATION: _power_iteration}.get(method)
    if solver is None:
        raise ParameterError(f"unknown method {method!r}")
    res = solver(lap.matrix, tol, max_iter, rng)
    if res is not None:
        est, iters = res
        est *= inflation
        if lap.kind == NORMALIZED:
            est = min(est, 2.0)
        return SpectrumBound(est, method, iters)

    if lap.kind == NORMALIZED:
        bound = 2.0
    else:
        bound = 2.0 * float(lap.degrees.max())
    logger.warning("%s did not converge; using analytic bound %.4g", method, bound)
    return SpectrumBound(bound, ANALYTIC_BOUND, max_iter)


def load_point_csv(path, header: bool = False, label_column: Optional[int] = None, delimiter: str = ","):
    """Read a point cloud from CSV.

    Returns ``(points, labels, feature_names)``; ``labels`` is None unless
    ``label_column`` is given, ``feature_names`` is None unless ``header``.
    Lines starting with ``#`` are skipped.
    """
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if header:
        if not lines:
            raise ParseError(f"{path}: empty file")
        names = [c.strip() for c in lines[0].split(delimiter)]
        lines = lines[1:]
    else:
        names = None
    if not lines:
        raise ParseError(f"{path}: no data rows")
    try:
        table = np.array([[float(c) for c in ln.split(delimiter)] for ln in lines])
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if table.ndim != 2:
        raise ParseError(f"{path}: ragged rows")
    labels = None
    if label_column is not None:
        col = label_column % table.shape[1]
        labels = table[:, col]
        if not np.all(labels == np.round(labels)):
            raise ParseError(f"{path}: label column {label_column} is not integer")
        labels = labels.astype(np.int64)
        table = np.delete(table, col, axis=1)
        if names is not None:
            names = names[:col] + names[col + 1:]
    if not np.all(np.isfinite(table)):
        raise ParseError(f"{path}: non-finite values")
    return table, labels, names
