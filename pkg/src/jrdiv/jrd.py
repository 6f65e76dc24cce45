"""Representation Jensen-Renyi divergence between two samples.

The divergence is the matrix-based mutual information between the pooled
sample's Gram matrix ``K_Z`` and the sample-membership indicator Gram matrix
``L_Z``. Three algebraically equivalent evaluation routes are provided:

* :func:`jrd_exact` - ``S(K_Z) + S(L_Z) - S(K_Z * L_Z)``.
* :func:`jrd_population_form` - ``log 2 - log(tr G^a / tr Q^a) / (a - 1)`` for
  equal sample sizes.
* :func:`jrd_from_block_spectra` - uses that ``K_Z * L_Z`` is block diagonal, so
  its spectrum is the union of the per-sample spectra.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InputError
from .kernels import ArrayLike, KernelSpec, as_matrix, gram_matrix
from .spectral import (
    Spectrum,
    check_alpha,
    entropy_alpha,
    entropy_from_power_sum,
    power_sum,
    spectrum,
    spectrum_from_eigenvalues,
)

BOUNDARY_TOL = 1e-8


class Method(str, enum.Enum):
    EXACT_MI = "exact"
    POPULATION_FORM = "population"
    BLOCK_SPECTRA = "block"
    RFF = "rff"


@dataclass(frozen=True)
class DivergenceResult:
    """A divergence value in nats with its provenance.

    ``value`` is ``raw_value`` clamped onto ``[0, upper_bound]`` when it lies
    within ``1e-8`` outside that interval; otherwise the two are equal.
    """

    value: float
    alpha: float
    n: int
    m: int
    method: Method
    raw_value: float
    diagnostics: dict = field(default_factory=dict)

    def __float__(self):
        return self.value

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "raw_value": self.raw_value,
            "alpha": self.alpha,
            "n": self.n,
            "m": self.m,
            "method": self.method.value,
            "diagnostics": dict(self.diagnostics),
        }


@dataclass(frozen=True)
class MixtureGram:
    K_Z: np.ndarray
    L_Z: np.ndarray
    n: int
    m: int

    @property
    def K_X(self) -> np.ndarray:
        return self.K_Z[: self.n, : self.n]

    @property
    def K_Y(self) -> np.ndarray:
        return self.K_Z[self.n :, self.n :]


def jrd_upper_bound(n: int, m: int, alpha) -> float:
    """Entropy of the indicator Gram matrix, the largest attainable divergence."""
    a = check_alpha(alpha)
    if n < 1 or m < 1:
        raise InputError(f"sample sizes must be positive, got {n}, {m}")
    if n == m:
        return math.log(2.0)
    total = n + m
    return math.log((n / total) ** a + (m / total) ** a) / (1.0 - a)


def indicator_gram(labels) -> np.ndarray:
    """``L_ij = 1`` when ``labels[i] == labels[j]``, else 0.

    Labels may be interleaved in any order; at most two distinct values.
    """
    labels = np.asarray(labels).ravel()
    if labels.size == 0:
        raise InputError("labels must be nonempty")
    if np.unique(labels).size > 2:
        raise InputError("indicator labels must be binary")
    return (labels[:, None] == labels[None, :]).astype(float)


def _pair(X: ArrayLike, Y: ArrayLike):
    X, Y = as_matrix(X), as_matrix(Y)
    if X.shape[1] != Y.shape[1]:
        raise InputError(f"feature dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    return X, Y


def build_mixture(X: ArrayLike, Y: ArrayLike, spec: KernelSpec) -> MixtureGram:
    """Pooled Gram matrix of ``[X; Y]`` and its indicator matrix.

    An unresolved bandwidth rule is resolved on the pooled sample.
    """
    X, Y = _pair(X, Y)
    Z = np.vstack([X, Y])
    spec = spec.resolve(Z)
    labels = np.r_[np.zeros(len(X), dtype=int), np.ones(len(Y), dtype=int)]
    return MixtureGram(gram_matrix(Z, spec), indicator_gram(labels), len(X), len(Y))


def _finalize(raw: float, n: int, m: int, alpha: float, method: Method, **diag) -> DivergenceResult:
    bound = jrd_upper_bound(n, m, alpha)
    value = raw
    if -BOUNDARY_TOL <= raw < 0.0:
        value = 0.0
    elif bound < raw <= bound + BOUNDARY_TOL:
        value = bound
    diag.setdefault("upper_bound", bound)
    return DivergenceResult(value, alpha, n, m, method, raw, diag)


def jrd_from_gram(K_Z: np.ndarray, labels, alpha) -> DivergenceResult:
    """Divergence from a pooled Gram matrix and per-row binary labels.

    Rows of the two samples may be interleaved; the label vector decides
    membership through the indicator matrix.
    """
    a = check_alpha(alpha)
    labels = np.asarray(labels).ravel()
    L = indicator_gram(labels)
    if L.shape != np.shape(K_Z):
        raise InputError(f"{labels.size} labels for a Gram matrix of shape {np.shape(K_Z)}")
    values = np.unique(labels)
    if values.size != 2:
        raise InputError("both samples must be nonempty")
    n = int(np.sum(labels == values[0]))
    m = labels.size - n
    raw = entropy_alpha(spectrum(K_Z), a) + entropy_alpha(spectrum(L), a) - entropy_alpha(spectrum(K_Z * L), a)
    return _finalize(raw, n, m, a, Method.EXACT_MI)


def jrd_exact(X: ArrayLike, Y: ArrayLike, spec: KernelSpec, alpha) -> DivergenceResult:
    """Mutual-information form ``S(K_Z) + S(L_Z) - S(K_Z * L_Z)``."""
    a = check_alpha(alpha)
    mix = build_mixture(X, Y, spec)
    raw = (
        entropy_alpha(spectrum(mix.K_Z), a)
        + entropy_alpha(spectrum(mix.L_Z), a)
        - entropy_alpha(spectrum(mix.K_Z * mix.L_Z), a)
    )
    return _finalize(raw, mix.n, mix.m, a, Method.EXACT_MI)


def trace_powers(X: ArrayLike, Y: ArrayLike, spec: KernelSpec, alpha) -> tuple[float, float]:
    """Empirical ``tr(G^a)`` and ``tr(Q^a)`` of the pooled-sample covariance operators.

    ``G`` has the spectrum of ``K_Z / (N + M)`` and ``Q`` that of
    ``K_Z * L_Z / (N + M)``.
    """
    a = check_alpha(alpha)
    mix = build_mixture(X, Y, spec)
    total = mix.n + mix.m
    tr_g = power_sum(spectrum(mix.K_Z, total).values, a)
    tr_q = power_sum(spectrum(mix.K_Z * mix.L_Z, total).values, a)
    return tr_g, tr_q


def trace_ratio(X: ArrayLike, Y: ArrayLike, spec: KernelSpec, alpha) -> float:
    """``tr(G^a) / tr(Q^a)``, the statistic whose concentration governs the estimator."""
    tr_g, tr_q = trace_powers(X, Y, spec, alpha)
    return tr_g / tr_q


def jrd_population_form(X: ArrayLike, Y: ArrayLike, spec: KernelSpec, alpha) -> DivergenceResult:
    """Operator form ``log 2 - log(tr G^a / tr Q^a) / (a - 1)``; needs ``N == M``."""
    a = check_alpha(alpha)
    n, m = len(as_matrix(X)), len(as_matrix(Y))
    if n != m:
        raise ConfigurationError(
            f"the population form requires equal sample sizes (got {n} and {m}); use the exact method"
        )
    tr_g, tr_q = trace_powers(X, Y, spec, a)
    raw = math.log(2.0) - math.log(tr_g / tr_q) / (a - 1.0)
    return _finalize(raw, n, m, a, Method.POPULATION_FORM, trace_G=tr_g, trace_Q=tr_q, beta=1.0 / tr_q)


def union_spectrum(spec_X: Spectrum, spec_Y: Spectrum, n: int, m: int) -> Spectrum:
    """Spectrum of ``blockdiag(K_X, K_Y) / (n + m)`` from per-sample spectra of ``K/n`` and ``K/m``."""
    total = n + m
    vals = np.concatenate([spec_X.values * (n / total), spec_Y.values * (m / total)])
    return spectrum_from_eigenvalues(vals, total)


def jrd_from_block_spectra(
    spec_Z: Spectrum, spec_X: Spectrum, spec_Y: Spectrum, n: int, m: int, alpha
) -> DivergenceResult:
    """Divergence from the pooled spectrum and the two per-sample spectra.

    ``spec_X`` and ``spec_Y`` are spectra of ``K_X / n`` and ``K_Y / m``; they are
    rescaled internally. The Hadamard product is never formed.
    """
    a = check_alpha(alpha)
    if spec_X.source_size != n or spec_Y.source_size != m or spec_Z.source_size != n + m:
        raise InputError(
            f"spectra sizes ({spec_X.source_size}, {spec_Y.source_size}, {spec_Z.source_size}) "
            f"do not match n={n}, m={m}"
        )
    joint = union_spectrum(spec_X, spec_Y, n, m)
    if abs(joint.mass - spec_Z.mass) > BOUNDARY_TOL * max(1.0, spec_Z.mass):
        raise InputError(
            f"block spectra mass {joint.mass:.12f} disagrees with pooled mass {spec_Z.mass:.12f}"
        )
    raw = entropy_alpha(spec_Z, a) + jrd_upper_bound(n, m, a) - entropy_alpha(joint, a)
    return _finalize(raw, n, m, a, Method.BLOCK_SPECTRA)


def jrd_block(X: ArrayLike, Y: ArrayLike, spec: KernelSpec, alpha) -> DivergenceResult:
    """Convenience wrapper computing the three spectra for :func:`jrd_from_block_spectra`."""
    mix = build_mixture(X, Y, spec)
    return jrd_from_block_spectra(
        spectrum(mix.K_Z), spectrum(mix.K_X), spectrum(mix.K_Y), mix.n, mix.m, alpha
    )


def jrd_from_power_sums(pooled: float, block_sum: float, n: int, m: int, alpha: float) -> float:
    """Raw divergence from precomputed power sums of the pooled and joint spectra."""
    return (
        entropy_from_power_sum(pooled, alpha)
        + jrd_upper_bound(n, m, alpha)
        - entropy_from_power_sum(block_sum, alpha)
    )


def divergence(X: ArrayLike, Y: ArrayLike, spec: KernelSpec, alpha, method="exact", rff_map=None):
    """Dispatch on ``method`` (``exact``, ``population``, ``block`` or ``rff``)."""
    method = Method(method)
    if method is Method.EXACT_MI:
        return jrd_exact(X, Y, spec, alpha)
    if method is Method.POPULATION_FORM:
        return jrd_population_form(X, Y, spec, alpha)
    if method is Method.BLOCK_SPECTRA:
        return jrd_block(X, Y, spec, alpha)
    if rff_map is None:
        raise ConfigurationError("the rff method needs a random feature map")
    from .rff import jrd_rff

    return jrd_rff(X, Y, rff_map, alpha)
