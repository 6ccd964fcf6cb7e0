"""Synthetic datasets, k-means clustering and partition-agreement metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ParameterError


@dataclass(frozen=True)
class LabeledDataset:
    points: np.ndarray  # (N, D)
    labels: np.ndarray  # (N,) ints in [0, n_classes)
    n_classes: int


def generate_two_moons(n: int = 600, noise: float = 0.12, seed=None, shuffle: bool = True) -> LabeledDataset:
    """Two interleaving half circles with isotropic Gaussian noise.

    ``n / 2`` points at evenly spaced angles on each arc: ``(cos t, sin t)``
    (class 0) and ``(1 - cos t, 0.5 - sin t)`` (class 1), t in [0, pi].
    """
    if n < 4 or n % 2:
        raise ParameterError(f"n must be an even number >= 4, got {n}")
    if noise < 0:
        raise ParameterError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    half = n // 2
    t = np.linspace(0.0, np.pi, half)
    upper = np.column_stack([np.cos(t), np.sin(t)])
    lower = np.column_stack([1.0 - np.cos(t), 0.5 - np.sin(t)])
    x = np.vstack([upper, lower])
    y = np.repeat([0, 1], half)
    if noise > 0:
        x = x + rng.normal(scale=noise, size=x.shape)
    if shuffle:
        perm = rng.permutation(n)
        x, y = x[perm], y[perm]
    return LabeledDataset(x, y, 2)


def generate_dense_sparse(seed=None, n_dense: int = 500, n_sparse: int = 100,
                          dense_radius: float = 0.5, circle_radius: float = 2.0,
                          jitter: float = 0.02, shuffle: bool = True) -> LabeledDataset:
    """A dense uniform disk (class 0) inside a sparse ring (class 1)."""
    rng = np.random.default_rng(seed)
    r = dense_radius * np.sqrt(rng.random(n_dense))
    a = rng.uniform(0.0, 2.0 * np.pi, n_dense)
    disk = np.column_stack([r * np.cos(a), r * np.sin(a)])
    a = rng.uniform(0.0, 2.0 * np.pi, n_sparse)
    r = circle_radius + rng.normal(scale=jitter, size=n_sparse)
    ring = np.column_stack([r * np.cos(a), r * np.sin(a)])
    x = np.vstack([disk, ring])
    y = np.repeat([0, 1], [n_dense, n_sparse])
    if shuffle:
        perm = rng.permutation(len(y))
        x, y = x[perm], y[perm]
    return LabeledDataset(x, y, 2)


def _as_points(x):
    if hasattr(x, "points") and not isinstance(x, np.ndarray):
        x = x.points
    x = np.asarray(x, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def _kmeanspp(x, k, rng, sq_norms):
    """Greedy k-means++: each step keeps the best of several D^2-sampled candidates."""
    n = x.shape[0]
    n_trials = 2 + int(np.log(k))
    centers = np.empty((k, x.shape[1]))
    first = rng.integers(n)
    centers[0] = x[first]
    closest = np.sum((x - x[first]) ** 2, axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            centers[c:] = x[rng.integers(n, size=k - c)]
            break
        cand = np.searchsorted(np.cumsum(closest), rng.random(n_trials) * total)
        cand = np.minimum(cand, n - 1)
        d = sq_norms[None, :] - 2.0 * x[cand] @ x.T + sq_norms[cand][:, None]
        d = np.minimum(np.maximum(d, 0.0), closest[None, :])
        best = int(np.argmin(d.sum(axis=1)))
        centers[c] = x[cand[best]]
        closest = d[best]
    return centers


def _lloyd(x, centers, max_iter):
    k = centers.shape[0]
    labels = None
    for _ in range(max_iter):
        d = np.sum((x[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new = np.argmin(d, axis=1)
        counts = np.bincount(new, minlength=k)
        for c in np.flatnonzero(counts == 0):
            # re-seed an empty cluster at the point farthest from its centroid
            far = int(np.argmax(d[np.arange(len(x)), new]))
            new[far] = c
            d[far] = 0.0
            counts = np.bincount(new, minlength=k)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            centers[c] = x[labels == c].mean(axis=0)
    inertia = float(np.sum((x - centers[labels]) ** 2))
    return labels, centers, inertia


def kmeans(x, k: int, seed=0, restarts: int = 10, max_iter: int = 300, return_inertia: bool = False):
    """Lloyd's algorithm from greedy k-means++ seeds; lowest inertia over ``restarts`` wins."""
    x = _as_points(x)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ParameterError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    sq_norms = np.einsum("ij,ij->i", x, x)
    best = None
    for _ in range(max(1, restarts)):
        centers = _kmeanspp(x, k, rng, sq_norms)
        labels, centers, inertia = _lloyd(x, centers, max_iter)
        if best is None or inertia < best[1]:
            best = (labels, inertia)
    return best if return_inertia else best[0]


def _contingency(a, b):
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        raise ParameterError("label vectors must have equal length")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1 if ai.size else 0, bi.max() + 1 if bi.size else 0), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1) / 2.0


def adjusted_rand_index(a, b) -> float:
    """Pair-counting Rand index corrected for chance."""
    table = _contingency(a, b)
    n = table.sum()
    sum_cells = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    total = _comb2(n)
    expected = sum_a * sum_b / total if total > 0 else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        # both partitions trivial (all singletons or one cluster): agree iff identical
        return 1.0 if sum_cells == max_index else 0.0
    return float((sum_cells - expected) / (max_index - expected))


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def _expected_mutual_information(table):
    n = int(table.sum())
    a = table.sum(axis=1)
    b = table.sum(axis=0)
    emi = 0.0
    lg_n = gammaln(n + 1)
    for ai in a:
        for bj in b:
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            if lo > hi:
                continue
            nij = np.arange(lo, hi + 1, dtype=float)
            term = nij / n * (np.log(n * nij) - np.log(ai * bj))
            log_p = (gammaln(ai + 1) + gammaln(bj + 1) + gammaln(n - ai + 1) + gammaln(n - bj + 1)
                     - lg_n - gammaln(nij + 1) - gammaln(ai - nij + 1) - gammaln(bj - nij + 1)
                     - gammaln(n - ai - bj + nij + 1))
            emi += float(np.sum(term * np.exp(log_p)))
    return emi


def adjusted_mutual_information(a, b) -> float:
    """Mutual information corrected for chance (permutation model), arithmetic-mean normalization."""
    table = _contingency(a, b)
    n = table.sum()
    if table.shape[0] == table.shape[1] == 1 or n == 0:
        return 1.0
    nz = table > 0
    pij = table[nz] / n
    pa = table.sum(axis=1) / n
    pb = table.sum(axis=0) / n
    rows, cols = np.nonzero(nz)
    mi = float(np.sum(pij * (np.log(pij) - np.log(pa[rows]) - np.log(pb[cols]))))
    emi = _expected_mutual_information(table)
    h_mean = 0.5 * (_entropy(table.sum(axis=1)) + _entropy(table.sum(axis=0)))
    denom = h_mean - emi
    if abs(denom) < 1e-15:
        return 1.0 if abs(mi - emi) < 1e-15 else 0.0
    return float((mi - emi) / denom)


def evaluate_clustering(x, labels, seed=0, restarts: int = 10):
    """k-means with k = number of true classes; returns ``(ari, ami, predicted)``."""
    labels = np.asarray(labels)
    k = len(np.unique(labels))
    pred = kmeans(x, k, seed=seed, restarts=restarts)
    return adjusted_rand_index(labels, pred), adjusted_mutual_information(labels, pred), pred
