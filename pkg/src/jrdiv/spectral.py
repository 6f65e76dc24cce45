"""Spectra of trace-normalized Gram matrices and matrix-based Renyi entropies.

For a unit-diagonal PSD matrix ``K`` of size ``n`` the entropy of order alpha is

    S_alpha(K) = log(sum_i lambda_i ** alpha) / (1 - alpha)

where ``lambda_i`` are the eigenvalues of ``K / n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError

#: Eigenvalues below this are treated as exact zeros.
EIG_FLOOR = 1e-12


def check_alpha(alpha) -> float:
    """Validate an entropy order: positive, finite and not equal to one."""
    try:
        a = float(alpha)
    except (TypeError, ValueError):
        raise InputError(f"alpha must be a real number, got {alpha!r}") from None
    if not math.isfinite(a) or a <= 0.0:
        raise InputError(f"alpha must be positive and finite, got {alpha}")
    if a == 1.0:
        raise InputError("alpha = 1 is not supported; use a value such as 1.01")
    return a


@dataclass(frozen=True)
class Spectrum:
    """Descending, nonnegative eigenvalues of a scaled Gram-type matrix.

    ``source_size`` is the sample count of the matrix the spectrum came from.
    Exact spectra of ``K / n`` sum to one; approximate (random-feature) spectra
    generally do not, and keep their raw mass.
    """

    values: np.ndarray
    source_size: int

    @property
    def mass(self) -> float:
        return float(np.sum(self.values))

    @property
    def nonzero(self) -> np.ndarray:
        return self.values[self.values > 0.0]

    def scaled(self, factor: float) -> "Spectrum":
        return spectrum_from_eigenvalues(self.values * factor, self.source_size)

    def __len__(self):
        return self.values.size


def spectrum_from_eigenvalues(values, source_size: int) -> Spectrum:
    """Clamp, floor and sort raw eigenvalues into a :class:`Spectrum`."""
    vals = np.asarray(values, dtype=float).ravel().copy()
    vals[vals < EIG_FLOOR] = 0.0
    vals = np.sort(vals)[::-1].copy()
    vals.setflags(write=False)
    return Spectrum(vals, int(source_size))


def _diagnostics(A: np.ndarray) -> str:
    finite = bool(np.all(np.isfinite(A)))
    if not finite:
        return f"shape={A.shape}, contains non-finite entries"
    asym = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    try:
        cond = np.linalg.cond(A)
    except np.linalg.LinAlgError:
        cond = float("nan")
    return f"shape={A.shape}, fro={np.linalg.norm(A):.3e}, max|A-A^T|={asym:.3e}, cond={cond:.3e}"


def eigvalsh_checked(A: np.ndarray) -> np.ndarray:
    """``numpy.linalg.eigvalsh`` with failures turned into :class:`NumericalError`."""
    if not np.all(np.isfinite(A)):
        raise NumericalError(f"matrix has non-finite entries; {_diagnostics(A)}")
    try:
        return np.linalg.eigvalsh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver did not converge ({exc}); {_diagnostics(A)}") from exc


def spectrum(K: np.ndarray, scale: int | None = None) -> Spectrum:
    """Spectrum of ``K / scale`` (``scale`` defaults to the matrix size)."""
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] == 0:
        raise InputError(f"expected a nonempty square matrix, got shape {K.shape}")
    n = K.shape[0]
    denom = n if scale is None else scale
    return spectrum_from_eigenvalues(eigvalsh_checked(K / denom), n)


def power_sum(values: np.ndarray, alpha: float) -> float:
    """``sum(v ** alpha)`` over the strictly positive entries of ``values``."""
    v = np.asarray(values, dtype=float)
    v = v[v > 0.0]
    return float(np.sum(v ** alpha))


def entropy_from_power_sum(total: float, alpha: float) -> float:
    if not total > 0.0 or not math.isfinite(total):
        raise NumericalError(f"power sum of the spectrum is {total}; entropy undefined")
    return math.log(total) / (1.0 - alpha)


def entropy_alpha(s: Spectrum, alpha) -> float:
    """Renyi entropy of order ``alpha`` of a spectrum."""
    a = check_alpha(alpha)
    return entropy_from_power_sum(power_sum(s.values, a), a)


def matrix_entropy(K: np.ndarray, alpha) -> float:
    """Shorthand for ``entropy_alpha(spectrum(K), alpha)``."""
    return entropy_alpha(spectrum(K), alpha)


def _check_pair(K_A: np.ndarray, K_B: np.ndarray) -> None:
    if np.shape(K_A) != np.shape(K_B):
        raise InputError(f"size mismatch: {np.shape(K_A)} vs {np.shape(K_B)}")


def joint_entropy(K_A: np.ndarray, K_B: np.ndarray, alpha) -> float:
    """Entropy of the Hadamard product ``K_A * K_B`` (paired samples)."""
    _check_pair(K_A, K_B)
    return matrix_entropy(np.asarray(K_A) * np.asarray(K_B), alpha)


def mutual_information(K_A: np.ndarray, K_B: np.ndarray, alpha) -> float:
    """``S(K_A) + S(K_B) - S(K_A, K_B)``."""
    _check_pair(K_A, K_B)
    return matrix_entropy(K_A, alpha) + matrix_entropy(K_B, alpha) - joint_entropy(K_A, K_B, alpha)
