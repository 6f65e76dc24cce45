"""Gaussian kernel, bandwidth heuristics and normalized Gram matrices."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .errors import DegenerateBandwidthError, InputError


@dataclass(frozen=True)
class SampleSet:
    """Row-sample matrix with optional integer labels.

    The data array is copied, validated and made read-only on construction.
    """

    data: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        data = np.array(self.data, dtype=float, copy=True)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise InputError(f"sample matrix must be N x d with N, d >= 1, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            bad = np.argwhere(~np.isfinite(data))[0]
            raise InputError(f"non-finite entry at row {bad[0]}, column {bad[1]}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        if self.labels is not None:
            labels = np.array(self.labels, copy=True)
            if labels.shape != (data.shape[0],):
                raise InputError(f"expected {data.shape[0]} labels, got shape {labels.shape}")
            if not np.issubdtype(labels.dtype, np.integer):
                as_int = labels.astype(np.int64)
                if not np.array_equal(as_int, labels):
                    raise InputError("labels must be integers")
                labels = as_int
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __len__(self):
        return self.n


ArrayLike = Union[SampleSet, np.ndarray, list]


def as_matrix(X: ArrayLike) -> np.ndarray:
    """Return a validated float ``N x d`` matrix for any accepted sample input."""
    if isinstance(X, SampleSet):
        return X.data
    return SampleSet(X).data


class BandwidthRule(str, enum.Enum):
    FIXED = "fixed"
    MEAN_SQDIST = "mean-sqdist"
    MEDIAN = "median"


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel description.

    ``bandwidth`` may be left as ``None`` for a heuristic rule; call
    :meth:`resolve` on the sample the rule should see to obtain a spec with a
    concrete bandwidth.
    """

    bandwidth: Optional[float] = None
    rule: BandwidthRule = BandwidthRule.FIXED
    family: str = field(default="gaussian")

    def __post_init__(self):
        object.__setattr__(self, "rule", BandwidthRule(self.rule))
        if self.family != "gaussian":
            raise InputError(f"unsupported kernel family {self.family!r}")
        if self.bandwidth is not None:
            sigma = float(self.bandwidth)
            if not (math.isfinite(sigma) and sigma > 0):
                raise InputError(f"bandwidth must be positive and finite, got {self.bandwidth}")
            object.__setattr__(self, "bandwidth", sigma)
        elif self.rule is BandwidthRule.FIXED:
            raise InputError("a fixed-rule kernel needs an explicit bandwidth")

    @classmethod
    def fixed(cls, sigma: float) -> "KernelSpec":
        return cls(bandwidth=sigma)

    @property
    def is_resolved(self) -> bool:
        return self.bandwidth is not None

    def resolve(self, Z: ArrayLike) -> "KernelSpec":
        if self.is_resolved:
            return self
        if self.rule is BandwidthRule.MEDIAN:
            sigma = bandwidth_median(Z)
        else:
            sigma = bandwidth_mean_sqdist(Z)
        return KernelSpec(bandwidth=sigma, rule=self.rule, family=self.family)

    def require_bandwidth(self) -> float:
        if self.bandwidth is None:
            raise InputError(f"kernel bandwidth rule {self.rule.value!r} has not been resolved")
        return self.bandwidth


def eval_kernel(x, y, spec: KernelSpec) -> float:
    """Gaussian kernel ``exp(-||x - y||^2 / (2 sigma^2))`` for two vectors."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.ndim != 1:
        raise InputError(f"dimension mismatch: {x.shape} vs {y.shape}")
    sigma = spec.require_bandwidth()
    diff = x - y
    return math.exp(-float(diff @ diff) / (2.0 * sigma * sigma))


def _require_pairs(X: np.ndarray) -> None:
    if X.shape[0] < 2:
        raise InputError("a bandwidth heuristic needs at least two samples")


def bandwidth_mean_sqdist(Z: ArrayLike) -> float:
    """``sqrt(mean ||z_i - z_j||^2 / 2)`` over all pairs ``i != j``.

    The sum is exactly rounded (``math.fsum``) so the result does not depend on
    row order.
    """
    Z = as_matrix(Z)
    _require_pairs(Z)
    sq = pdist(Z, "sqeuclidean")
    mean_sq = math.fsum(sq.tolist()) / sq.size
    if mean_sq <= 0.0:
        raise DegenerateBandwidthError("all samples coincide; mean squared distance is zero")
    return math.sqrt(mean_sq / 2.0)


def bandwidth_median(X: ArrayLike) -> float:
    """Median of the ``N(N-1)/2`` pairwise Euclidean distances."""
    X = as_matrix(X)
    _require_pairs(X)
    med = float(np.median(pdist(X, "euclidean")))
    if med <= 0.0:
        raise DegenerateBandwidthError("median pairwise distance is zero")
    return med


def _normalize(K: np.ndarray) -> np.ndarray:
    diag = np.diag(K).copy()
    if np.any(diag <= 0.0):
        raise InputError("kernel self-similarity must be positive for normalization")
    scale = np.sqrt(diag)
    K = K / np.outer(scale, scale)
    np.fill_diagonal(K, 1.0)
    return K


def gram_matrix(X: ArrayLike, spec: KernelSpec) -> np.ndarray:
    """Normalized Gram matrix ``K_ij = k(x_i, x_j) / sqrt(k(x_i, x_i) k(x_j, x_j))``.

    Built from the condensed upper triangle, so the result is exactly symmetric
    with a diagonal of exact ones.
    """
    X = as_matrix(X)
    sigma = spec.require_bandwidth()
    if X.shape[0] == 1:
        return np.ones((1, 1))
    K = squareform(np.exp(-pdist(X, "sqeuclidean") / (2.0 * sigma * sigma)))
    np.fill_diagonal(K, 1.0)
    return _normalize(K)


def cross_gram(X: ArrayLike, Y: ArrayLike, spec: KernelSpec) -> np.ndarray:
    """Rectangular kernel matrix between two samples (Gaussian, already normalized)."""
    X, Y = as_matrix(X), as_matrix(Y)
    if X.shape[1] != Y.shape[1]:
        raise InputError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    sigma = spec.require_bandwidth()
    return np.exp(-cdist(X, Y, "sqeuclidean") / (2.0 * sigma * sigma))
