"""Random Fourier features for the Gaussian kernel.

``phi(x)_i = sqrt(2 / D) * cos(w_i . x + b_i)`` with ``w_i ~ N(0, I / sigma^2)``
and ``b_i ~ U[0, 2 pi)``, so that ``E[phi(x) . phi(y)] = exp(-||x - y||^2 / (2 sigma^2))``.
The nonzero eigenvalues of ``Phi Phi^T`` and ``Phi^T Phi`` coincide, which lets
the divergence be evaluated on ``D x D`` matrices when samples are large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .jrd import DivergenceResult, Method, _finalize, _pair, jrd_upper_bound
from .kernels import ArrayLike, as_matrix
from .spectral import (
    Spectrum,
    check_alpha,
    eigvalsh_checked,
    entropy_alpha,
    spectrum_from_eigenvalues,
)


@dataclass(frozen=True, eq=False)
class RffMap:
    """Frozen random frequencies (``D x d``) and phase offsets (``D``)."""

    frequencies: np.ndarray
    offsets: np.ndarray
    sigma: float
    seed: int

    @property
    def n_features(self) -> int:
        return self.frequencies.shape[0]

    @property
    def dim(self) -> int:
        return self.frequencies.shape[1]

    def same_as(self, other: "RffMap") -> bool:
        return (
            self.sigma == other.sigma
            and self.seed == other.seed
            and np.array_equal(self.frequencies, other.frequencies)
            and np.array_equal(self.offsets, other.offsets)
        )


def sample_rff(d: int, n_features: int, sigma: float, seed: int) -> RffMap:
    """Draw a reproducible feature map for a Gaussian kernel of bandwidth ``sigma``."""
    if d < 1 or n_features < 1:
        raise InputError(f"need d >= 1 and D >= 1, got d={d}, D={n_features}")
    if not (math.isfinite(sigma) and sigma > 0):
        raise InputError(f"sigma must be positive and finite, got {sigma}")
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((n_features, d)) / sigma
    b = rng.uniform(0.0, 2.0 * math.pi, size=n_features)
    W.setflags(write=False)
    b.setflags(write=False)
    return RffMap(W, b, float(sigma), int(seed))


def feature_map(rff_map: RffMap, X: ArrayLike) -> np.ndarray:
    """``N x D`` random feature matrix of the rows of ``X``."""
    X = as_matrix(X)
    if X.shape[1] != rff_map.dim:
        raise InputError(f"map expects dimension {rff_map.dim}, data has {X.shape[1]}")
    D = rff_map.n_features
    return math.sqrt(2.0 / D) * np.cos(X @ rff_map.frequencies.T + rff_map.offsets)


def _factor_eigenvalues(F: np.ndarray, denom: float, covariance: bool) -> np.ndarray:
    if covariance:
        return eigvalsh_checked(F.T @ F / denom)
    return eigvalsh_checked(F @ F.T / denom)


def rff_spectrum(features: np.ndarray, scale: float | None = None, route: str = "auto") -> Spectrum:
    """Approximate spectrum of ``K / N`` from ``N x D`` features.

    Uses the ``D x D`` feature covariance when ``D <= N`` (``route="covariance"``)
    and the ``N x N`` feature Gram otherwise (``route="gram"``); both give the same
    nonzero eigenvalues. The result is zero-padded to length ``N`` and keeps its
    raw mass ``||Phi||_F^2 / N``.
    """
    F = np.atleast_2d(np.asarray(features, dtype=float))
    N, D = F.shape
    if N < 1:
        raise InputError("need at least one feature row")
    denom = N if scale is None else scale
    if route == "auto":
        route = "covariance" if D <= N else "gram"
    vals = _factor_eigenvalues(F, denom, route == "covariance")
    if vals.size < N:
        vals = np.concatenate([vals, np.zeros(N - vals.size)])
    elif vals.size > N:
        vals = np.sort(vals)[vals.size - N :]
    return spectrum_from_eigenvalues(vals, N)


def jrd_rff(X: ArrayLike, Y: ArrayLike, rff_map: RffMap, alpha, y_map: RffMap | None = None) -> DivergenceResult:
    """Random-feature estimate of the divergence.

    The pooled spectrum comes from the stacked features and the joint spectrum
    from the union of the per-sample spectra, all scaled by ``1 / (N + M)``. The
    ``D x D`` covariance route is used when ``N + M > 2 D``; below that the
    feature Gram matrices are cheaper and give identical eigenvalues.
    """
    a = check_alpha(alpha)
    if y_map is not None and not rff_map.same_as(y_map):
        raise InputError("X and Y must share one random feature map")
    X, Y = _pair(X, Y)
    n, m = len(X), len(Y)
    total = n + m
    Fx, Fy = feature_map(rff_map, X), feature_map(rff_map, Y)
    D = rff_map.n_features
    covariance = total > 2 * D
    if covariance:
        Cx, Cy = Fx.T @ Fx, Fy.T @ Fy
        pooled = eigvalsh_checked((Cx + Cy) / total)
        block = np.concatenate([eigvalsh_checked(Cx / total), eigvalsh_checked(Cy / total)])
    else:
        Fz = np.vstack([Fx, Fy])
        pooled = eigvalsh_checked(Fz @ Fz.T / total)
        block = np.concatenate([eigvalsh_checked(Fx @ Fx.T / total), eigvalsh_checked(Fy @ Fy.T / total)])
    spec_z = spectrum_from_eigenvalues(pooled, total)
    joint = spectrum_from_eigenvalues(block, total)
    raw = entropy_alpha(spec_z, a) + jrd_upper_bound(n, m, a) - entropy_alpha(joint, a)
    trace = (float(np.sum(Fx * Fx)) + float(np.sum(Fy * Fy))) / total
    return _finalize(
        raw,
        n,
        m,
        a,
        Method.RFF,
        route="covariance" if covariance else "gram",
        n_features=D,
        seed=rff_map.seed,
        trace=trace,
        trace_error=abs(trace - 1.0),
    )
