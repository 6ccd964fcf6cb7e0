"""Spectral graph wavelet filter banks and transforms.

Band 0 of every filter bank is the low-pass scaling kernel ``h``; bands
1..K-1 are the band-pass kernel ``g`` dilated by the wavelet scales.
Coefficients are computed either exactly from a dense eigendecomposition
(small graphs, used as a reference) or with a shifted Chebyshev expansion
that only needs sparse matrix-vector products.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import OracleSizeError, ParameterError, SpectralDomainError
from .graph import Laplacian, check_points, estimate_lambda_max

logger = logging.getLogger(__name__)

EXACT_MAX_NODES = 2000
DEFAULT_ORDER = 40
DEFAULT_BANDS = 5
# ratio lambda_max / lambda_min of the design interval covered by the wavelets
DESIGN_RATIO = 20.0
SCALING_WIDTH = 0.3


def band_kernel(x):
    """Band-pass kernel ``x exp(1 - x)``: zero at 0, peak 1 at x = 1."""
    x = np.asarray(x, dtype=float)
    return x * np.exp(1.0 - x)


@dataclass(frozen=True)
class FilterBank:
    lambda_max: float
    scales: np.ndarray  # wavelet scales, descending; len == n_bands - 1

    @property
    def n_bands(self) -> int:
        return len(self.scales) + 1

    def scaling_kernel(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-((x / (SCALING_WIDTH * self.lambda_max)) ** 4))

    def kernel(self, band: int) -> Callable[[np.ndarray], np.ndarray]:
        if band == 0:
            return self.scaling_kernel
        s = float(self.scales[band - 1])
        return lambda x: band_kernel(s * np.asarray(x, dtype=float))

    def evaluate(self, x) -> np.ndarray:
        """Responses of all bands at ``x``, shape (n_bands, len(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.stack([self.kernel(j)(x) for j in range(self.n_bands)])


def design_filter_bank(lambda_max: float, n_bands: int = DEFAULT_BANDS) -> FilterBank:
    """Scaling band plus ``n_bands - 1`` log-spaced wavelet scales.

    The wavelet scales run from ``DESIGN_RATIO / lambda_max`` down to
    ``1 / lambda_max`` so the band-pass peaks cover
    ``[lambda_max / DESIGN_RATIO, lambda_max]``.
    """
    if not lambda_max > 0:
        raise ParameterError(f"lambda_max must be positive, got {lambda_max}")
    if n_bands < 2:
        raise ParameterError(f"n_bands must be >= 2, got {n_bands}")
    lambda_min = lambda_max / DESIGN_RATIO
    scales = np.geomspace(1.0 / lambda_min, 1.0 / lambda_max, n_bands - 1)
    scales.flags.writeable = False
    return FilterBank(float(lambda_max), scales)


@dataclass(frozen=True)
class ChebyshevCoeffs:
    """Shifted Chebyshev expansions of one or more kernels on ``[0, lambda_max]``.

    ``coeffs[j, k]`` multiplies ``T_k((x - a) / a)`` with ``a = lambda_max / 2``;
    the k = 0 term enters with weight one half.
    """

    coeffs: np.ndarray  # (n_bands, order + 1)
    lambda_max: float

    @property
    def order(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def n_bands(self) -> int:
        return self.coeffs.shape[0]

    def evaluate(self, x) -> np.ndarray:
        """Evaluate every expansion at ``x``; shape (n_bands, len(x))."""
        a = self.lambda_max / 2.0
        y = (np.atleast_1d(np.asarray(x, dtype=float)) - a) / a
        c = self.coeffs.copy()
        c[:, 0] *= 0.5
        return np.polynomial.chebyshev.chebval(y, c.T)


def chebyshev_coefficients(kernel: Callable, order: int, lambda_max: float) -> np.ndarray:
    """Chebyshev coefficients of ``kernel`` on ``[0, lambda_max]`` by cosine-sampled projection."""
    if order < 0:
        raise ParameterError("order must be non-negative")
    n_nodes = 2 * (order + 1)
    theta = np.pi * (np.arange(n_nodes) + 0.5) / n_nodes
    a = lambda_max / 2.0
    samples = np.asarray(kernel(a * (np.cos(theta) + 1.0)), dtype=float)
    k = np.arange(order + 1)
    return (2.0 / n_nodes) * (np.cos(np.outer(k, theta)) @ samples)


def chebyshev_fit(bank: FilterBank, order: int = DEFAULT_ORDER, tail_tol: float = 1e-6) -> ChebyshevCoeffs:
    if order < 3:
        raise ParameterError(f"Chebyshev order must be >= 3, got {order}")
    c = np.stack([chebyshev_coefficients(bank.kernel(j), order, bank.lambda_max) for j in range(bank.n_bands)])
    for j, row in enumerate(c):
        peak = np.abs(row).max()
        if peak > 0 and abs(row[-1]) > tail_tol * peak:
            logger.warning("band %d: last Chebyshev coefficient %.2e of peak; order %d may be too low",
                           j, abs(row[-1]) / peak, order)
    c.flags.writeable = False
    return ChebyshevCoeffs(c, bank.lambda_max)


def _check_domain(lap: Laplacian, upper: float):
    gershgorin = 2.0 * float(np.max(np.abs(lap.degrees))) if lap.kind == "combinatorial" else 2.0
    if gershgorin <= upper:
        return
    est = estimate_lambda_max(lap, inflation=1.0).lambda_max
    if est > upper * (1.0 + 1e-9):
        raise SpectralDomainError(
            f"Laplacian spectrum reaches {est:.6g}, beyond the approximation domain [0, {upper:.6g}]"
        )


def sgw_chebyshev(lap: Laplacian, signal, coeffs: ChebyshevCoeffs, check_domain: bool = True) -> np.ndarray:
    """Approximate SGW coefficients with the shifted Chebyshev recurrence.

    ``signal`` may be a vector (N,) giving output (n_bands, N), or a matrix
    (N, D) of D signals giving output (n_bands, D, N). The recurrence is
    shared by all bands, so the cost is ``order`` sparse products.
    """
    f = np.asarray(signal, dtype=float)
    vector = f.ndim == 1
    if vector:
        f = f[:, None]
    if f.shape[0] != lap.n_nodes:
        raise ParameterError(f"signal has {f.shape[0]} entries, graph has {lap.n_nodes} nodes")
    if check_domain:
        _check_domain(lap, coeffs.lambda_max)

    c = coeffs.coeffs
    a = coeffs.lambda_max / 2.0
    mat = lap.matrix
    t_prev = f
    out = 0.5 * c[:, 0][:, None, None] * t_prev[None]
    if coeffs.order >= 1:
        t_cur = (mat @ f - a * f) / a
        out = out + c[:, 1][:, None, None] * t_cur[None]
        for k in range(2, coeffs.order + 1):
            t_next = (2.0 / a) * (mat @ t_cur - a * t_cur) - t_prev
            out = out + c[:, k][:, None, None] * t_next[None]
            t_prev, t_cur = t_cur, t_next
    # (bands, N, D) -> (bands, D, N)
    out = np.transpose(out, (0, 2, 1))
    return out[:, 0, :] if vector else np.ascontiguousarray(out)


def sgw_exact(lap: Laplacian, signal, bank: FilterBank) -> np.ndarray:
    """Reference SGW coefficients from a full eigendecomposition (N <= 2000).

    Same input/output shapes as :func:`sgw_chebyshev`.
    """
    n = lap.n_nodes
    if n > EXACT_MAX_NODES:
        raise OracleSizeError(f"exact SGW limited to {EXACT_MAX_NODES} nodes, got {n}")
    f = np.asarray(signal, dtype=float)
    vector = f.ndim == 1
    if vector:
        f = f[:, None]
    dense = lap.matrix.toarray() if sp.issparse(lap.matrix) else np.asarray(lap.matrix)
    lam, phi = np.linalg.eigh(dense)
    lam = np.clip(lam, 0.0, None)
    f_hat = phi.T @ f  # graph Fourier transform, (N, D)
    response = bank.evaluate(lam)  # (bands, N)
    out = np.einsum("nl,bl,ld->bdn", phi, response, f_hat)
    return out[:, 0, :] if vector else out


@dataclass(frozen=True)
class SgwTensor:
    """SGW coefficients of every feature: ``coeffs[j, r, i]`` is band j, feature r, node i."""

    coeffs: np.ndarray  # (n_bands, n_features, n_nodes)
    scales: np.ndarray
    lambda_max: float

    @property
    def n_bands(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_features(self) -> int:
        return self.coeffs.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.coeffs.shape[2]

    @property
    def shape(self):
        return self.coeffs.shape

    def band(self, j: int) -> np.ndarray:
        return self.coeffs[j]


def sgw_transform_all(points, lap: Laplacian, bank: FilterBank, order: int = DEFAULT_ORDER) -> SgwTensor:
    """Transform every feature column of ``points`` into an (n_bands, D, N) tensor."""
    x = check_points(points)
    if x.shape[0] != lap.n_nodes:
        raise ParameterError(f"{x.shape[0]} points but Laplacian has {lap.n_nodes} nodes")
    coeffs = chebyshev_fit(bank, order)
    out = sgw_chebyshev(lap, x, coeffs)
    if not np.all(np.isfinite(out)):
        raise SpectralDomainError("non-finite SGW coefficients")
    return SgwTensor(out, np.asarray(bank.scales), bank.lambda_max)

