"""Initial embeddings assembled from an SGW tensor.

Method 1 flattens the (K, D, N) tensor into a (K*D, N) matrix, scale-major:
all features at the first scale, then all features at the second, and so
on. Method 2 keeps the tensor and attaches feature names.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ParameterError
from .sgw import SgwTensor


@dataclass(frozen=True)
class EncodedMethod1:
    matrix: np.ndarray  # (K * D, N)
    n_bands: int
    n_features: int
    feature_names: Optional[tuple] = None

    def row_index_map(self, row: int) -> tuple[int, int]:
        """Zero-based ``(band, feature)`` for a zero-based matrix row."""
        if not 0 <= row < self.matrix.shape[0]:
            raise ParameterError(f"row {row} out of range")
        return divmod(row, self.n_features)

    def rows_of_feature(self, feature: int) -> np.ndarray:
        return np.arange(self.n_bands) * self.n_features + feature

    def to_tensor(self) -> np.ndarray:
        return self.matrix.reshape(self.n_bands, self.n_features, -1)


@dataclass(frozen=True)
class EncodedMethod2:
    tensor: SgwTensor
    feature_names: Optional[tuple] = None

    @property
    def n_features(self) -> int:
        return self.tensor.n_features


def _check_names(names, n_features):
    if n_features < 1:
        raise ParameterError("tensor has no features")
    if names is None:
        return None
    names = tuple(str(n) for n in names)
    if len(names) != n_features:
        raise ParameterError(f"{len(names)} feature names for {n_features} features")
    return names


def encode_method1(tensor: SgwTensor, feature_names: Optional[Sequence[str]] = None) -> EncodedMethod1:
    k, d, n = tensor.shape
    names = _check_names(feature_names, d)
    return EncodedMethod1(tensor.coeffs.reshape(k * d, n).copy(), k, d, names)


def encode_method2(tensor: SgwTensor, feature_names: Optional[Sequence[str]] = None) -> EncodedMethod2:
    names = _check_names(feature_names, tensor.n_features)
    return EncodedMethod2(tensor, names)
