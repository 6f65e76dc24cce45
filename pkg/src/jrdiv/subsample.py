"""Majority-class subset selection by divergence minimization.

Given the majority class ``X+`` (``n`` rows), find ``M`` rows whose divergence
to the whole of ``X+`` is smallest. The search scores candidate subsets through
a factor ``F`` (``n x r``) with ``F F^T = K`` (exact eigen-factor of the Gram
matrix, or random features). For a subset ``S`` the pooled spectrum is that of
``(F^T F + F_S^T F_S) / (n + M)`` and the joint spectrum is the union of the
spectra of ``K_S`` and ``F^T F``, both scaled by ``1 / (n + M)``; no matrix
larger than ``r x r`` or ``M x M`` is decomposed per candidate.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InputError
from .jrd import jrd_exact, jrd_upper_bound
from .kernels import ArrayLike, BandwidthRule, KernelSpec, SampleSet, as_matrix, gram_matrix
from .rff import RffMap, feature_map, jrd_rff, sample_rff
from .spectral import EIG_FLOOR, check_alpha, eigvalsh_checked

log = logging.getLogger(__name__)

SWAP_TOL = 1e-9
TIE_TOL = 1e-12
# eigenvalues of K below FACTOR_TOL * n are dropped from the factor
FACTOR_TOL = 1e-13
_CHUNK_DOUBLES = 4_000_000


class Strategy(str, enum.Enum):
    GREEDY_FORWARD = "greedy-forward"
    GREEDY_SWAP = "greedy-swap"
    RANDOM_BEST = "random-best"


@dataclass(frozen=True)
class SubsampleConfig:
    """Subset search settings.

    ``target_size=None`` means "the minority count" in :func:`balance_dataset`.
    ``rff_features=None`` selects exact evaluation. ``restarts`` applies to the
    swap strategy: restart 0 starts from the forward-greedy subset, later
    restarts from uniformly random subsets.
    """

    target_size: Optional[int] = None
    alpha: float = 1.01
    strategy: Strategy = Strategy.GREEDY_SWAP
    rff_features: Optional[int] = None
    seed: int = 0
    max_swap_rounds: int = 10
    restarts: int = 1
    random_draws: int = 100

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        check_alpha(self.alpha)
        if self.target_size is not None and self.target_size < 1:
            raise InputError(f"target size must be positive, got {self.target_size}")
        if self.rff_features is not None and self.rff_features < 1:
            raise InputError("rff_features must be positive")
        if self.restarts < 1 or self.random_draws < 1 or self.max_swap_rounds < 0:
            raise InputError("restarts and random_draws must be >= 1, max_swap_rounds >= 0")


@dataclass
class SubsampleResult:
    indices: np.ndarray
    final_divergence: float
    trajectory: list = field(default_factory=list)
    swap_start: int = 0
    bandwidth: float = float("nan")
    swap_rounds: int = 0

    def to_dict(self) -> dict:
        return {
            "indices": [int(i) for i in self.indices],
            "final_divergence": self.final_divergence,
            "trajectory": [float(v) for v in self.trajectory],
            "swap_start": self.swap_start,
            "swap_rounds": self.swap_rounds,
            "bandwidth": self.bandwidth,
        }


def majority_kernel(X_plus: ArrayLike) -> KernelSpec:
    """Gaussian kernel with the median-distance bandwidth of the majority class."""
    return KernelSpec(rule=BandwidthRule.MEDIAN).resolve(X_plus)


def evaluate_subset(indices, X_plus: ArrayLike, spec: KernelSpec | None = None, alpha=1.01,
                    rff_map: RffMap | None = None) -> float:
    """Divergence between ``X+[indices]`` and ``X+`` (exact, or random features).

    An unresolved ``spec`` is resolved on ``X+`` itself, not on the pooled sample.
    """
    X_plus = as_matrix(X_plus)
    idx = _check_indices(indices, len(X_plus))
    if rff_map is not None:
        return jrd_rff(X_plus[idx], X_plus, rff_map, alpha).value
    spec = majority_kernel(X_plus) if spec is None else spec.resolve(X_plus)
    return jrd_exact(X_plus[idx], X_plus, spec, alpha).value


def _check_indices(indices, n: int) -> np.ndarray:
    idx = np.asarray(indices, dtype=int).ravel()
    if idx.size == 0:
        raise InputError("subset must be nonempty")
    if np.unique(idx).size != idx.size:
        raise InputError("subset indices must be distinct")
    if idx.min() < 0 or idx.max() >= n:
        raise InputError(f"subset indices must lie in [0, {n})")
    return idx


def _gram_factor(K: np.ndarray) -> np.ndarray:
    lam, U = np.linalg.eigh(K)
    keep = lam > FACTOR_TOL * K.shape[0]
    return U[:, keep] * np.sqrt(lam[keep])


def _power_sums(vals: np.ndarray, alpha: float) -> np.ndarray:
    v = np.where(vals >= EIG_FLOOR, vals, 0.0)
    return np.sum(v ** alpha, axis=-1)


class _SubsetObjective:
    """Batched divergence of candidate subsets of the factored majority set."""

    def __init__(self, F: np.ndarray, alpha: float):
        self.F = F
        self.alpha = alpha
        self.n, self.r = F.shape
        self.base = F.T @ F
        self.base_eigs = eigvalsh_checked(self.base)
        self.sq_norms = np.einsum("ij,ij->i", F, F)

    def _values(self, G: np.ndarray, J: np.ndarray | None, m: int) -> np.ndarray:
        a = self.alpha
        total = self.n + m
        mix = _power_sums(eigvalsh_checked((self.base + G) / total), a)
        small = eigvalsh_checked(J / total) if J is not None else eigvalsh_checked(G / total)
        joint = _power_sums(small, a) + _power_sums(self.base_eigs / total, a)
        return (np.log(mix) - np.log(joint)) / (1.0 - a) + jrd_upper_bound(m, self.n, a)

    def _chunk(self, m: int) -> int:
        return max(1, _CHUNK_DOUBLES // max(self.r * self.r, m * m, 1))

    def subsets(self, subsets: np.ndarray) -> np.ndarray:
        """Values for an array of subsets (``k x m`` indices)."""
        subsets = np.atleast_2d(subsets)
        k, m = subsets.shape
        out = np.empty(k)
        step = self._chunk(m)
        for lo in range(0, k, step):
            Fs = self.F[subsets[lo : lo + step]]
            G = np.matmul(Fs.transpose(0, 2, 1), Fs)
            J = np.matmul(Fs, Fs.transpose(0, 2, 1)) if m <= self.r else None
            out[lo : lo + step] = self._values(G, J, m)
        return out

    def value(self, subset) -> float:
        return float(self.subsets(np.asarray(subset, dtype=int)[None, :])[0])

    def extensions(self, subset: np.ndarray, candidates: np.ndarray) -> np.ndarray:
        """Values of ``subset + [c]`` for every candidate ``c``."""
        m = subset.size + 1
        Fs = self.F[subset]
        G_S = Fs.T @ Fs
        K_S = Fs @ Fs.T
        out = np.empty(candidates.size)
        step = self._chunk(m)
        for lo in range(0, candidates.size, step):
            c = candidates[lo : lo + step]
            Fc = self.F[c]
            G = G_S + Fc[:, :, None] * Fc[:, None, :]
            J = None
            if m <= self.r:
                J = np.empty((c.size, m, m))
                J[:, :-1, :-1] = K_S
                cross = Fc @ Fs.T
                J[:, -1, :-1] = cross
                J[:, :-1, -1] = cross
                J[:, -1, -1] = self.sq_norms[c]
            out[lo : lo + step] = self._values(G, J, m)
        return out

    def swaps(self, subset: np.ndarray, position: int, candidates: np.ndarray) -> np.ndarray:
        """Values of ``subset`` with ``subset[position]`` replaced by each candidate."""
        m = subset.size
        Fs = self.F[subset]
        f_out = Fs[position]
        G_rest = Fs.T @ Fs - np.outer(f_out, f_out)
        K_S = Fs @ Fs.T
        out = np.empty(candidates.size)
        step = self._chunk(m)
        for lo in range(0, candidates.size, step):
            c = candidates[lo : lo + step]
            Fc = self.F[c]
            G = G_rest + Fc[:, :, None] * Fc[:, None, :]
            J = None
            if m <= self.r:
                J = np.broadcast_to(K_S, (c.size, m, m)).copy()
                cross = Fc @ Fs.T
                J[:, position, :] = cross
                J[:, :, position] = cross
                J[:, position, position] = self.sq_norms[c]
            out[lo : lo + step] = self._values(G, J, m)
        return out


def _argmin(values: np.ndarray) -> int:
    """Index of the minimum; near-ties (within TIE_TOL) go to the lowest index."""
    best = float(np.min(values))
    return int(np.flatnonzero(values <= best + TIE_TOL)[0])


def _forward(obj: _SubsetObjective, M: int) -> tuple[list, list]:
    chosen: list[int] = []
    trajectory = []
    remaining = np.arange(obj.n)
    for _ in range(M):
        vals = obj.extensions(np.asarray(chosen, dtype=int), remaining)
        j = _argmin(vals)
        chosen.append(int(remaining[j]))
        trajectory.append(float(vals[j]))
        remaining = np.delete(remaining, j)
    return chosen, trajectory


def _swap(obj: _SubsetObjective, start: list, current: float, max_rounds: int):
    subset = np.asarray(start, dtype=int)
    trajectory = [current]
    rounds = 0
    while rounds < max_rounds:
        outside = np.setdiff1d(np.arange(obj.n), subset)
        if outside.size == 0:
            break
        best_val, best_pos, best_c = np.inf, -1, -1
        # candidates ascending, positions ordered by original index: lowest index wins ties
        for pos in np.argsort(subset, kind="stable"):
            vals = obj.swaps(subset, int(pos), outside)
            j = _argmin(vals)
            if vals[j] < best_val - TIE_TOL:
                best_val, best_pos, best_c = float(vals[j]), int(pos), int(outside[j])
        if not best_val < current - SWAP_TOL:
            break
        subset[best_pos] = best_c
        current = best_val
        trajectory.append(current)
        rounds += 1
    return list(subset), trajectory, rounds


def _objective(X_plus: np.ndarray, spec: KernelSpec, cfg: SubsampleConfig, rff_map: RffMap | None):
    if rff_map is None:
        F = _gram_factor(gram_matrix(X_plus, spec))
    else:
        Phi = feature_map(rff_map, X_plus)
        F = Phi if Phi.shape[1] <= Phi.shape[0] else _gram_factor(Phi @ Phi.T)
    return _SubsetObjective(F, check_alpha(cfg.alpha))


def select_subset(X_plus: ArrayLike, cfg: SubsampleConfig) -> SubsampleResult:
    """Choose ``cfg.target_size`` rows of ``X+`` minimizing the divergence to ``X+``.

    ``greedy-forward`` grows the subset one row at a time, each step taking the
    row that minimizes the divergence of the grown subset. ``greedy-swap`` then
    applies best-improvement single swaps until no swap gains more than
    ``1e-9`` or ``max_swap_rounds`` is reached. ``random-best`` keeps the best
    of ``random_draws`` uniform subsets. Ties go to the lowest row index.
    """
    X_plus = as_matrix(X_plus)
    n = len(X_plus)
    M = n if cfg.target_size is None else cfg.target_size
    if M > n:
        raise InputError(f"target size {M} exceeds the majority count {n}")
    spec = majority_kernel(X_plus)
    rff_map = None
    if cfg.rff_features is not None:
        rff_map = sample_rff(X_plus.shape[1], cfg.rff_features, spec.bandwidth, cfg.seed)

    def final(indices) -> float:
        return evaluate_subset(indices, X_plus, spec, cfg.alpha, rff_map)

    if M == n:
        idx = np.arange(n)
        value = final(idx)
        return SubsampleResult(idx, value, [value], 0, spec.bandwidth)

    obj = _objective(X_plus, spec, cfg, rff_map)
    rng = np.random.default_rng(cfg.seed)

    if cfg.strategy is Strategy.RANDOM_BEST:
        draws = np.stack([np.sort(rng.choice(n, size=M, replace=False)) for _ in range(cfg.random_draws)])
        vals = obj.subsets(draws)
        trajectory = []
        for v in vals:
            if not trajectory or v < trajectory[-1]:
                trajectory.append(float(v))
        idx = draws[_argmin(vals)]
        return SubsampleResult(idx, final(idx), trajectory, 0, spec.bandwidth)

    chosen, trajectory = _forward(obj, M)
    if cfg.strategy is Strategy.GREEDY_FORWARD:
        idx = np.sort(chosen)
        return SubsampleResult(idx, final(idx), trajectory, len(trajectory) - 1, spec.bandwidth)

    best = None
    for run in range(cfg.restarts):
        if run == 0:
            start, prefix = chosen, trajectory[:-1]
            start_val = trajectory[-1]
        else:
            start = list(np.sort(np.random.default_rng([cfg.seed, run]).choice(n, size=M, replace=False)))
            prefix, start_val = [], obj.value(start)
        subset, swap_traj, rounds = _swap(obj, start, start_val, cfg.max_swap_rounds)
        log.debug("restart %d: %.6g -> %.6g in %d swaps", run, start_val, swap_traj[-1], rounds)
        if best is None or swap_traj[-1] < best[1][-1] - TIE_TOL:
            best = (subset, prefix + swap_traj, len(prefix), rounds)
    subset, traj, swap_start, rounds = best
    idx = np.sort(subset)
    return SubsampleResult(idx, final(idx), traj, swap_start, spec.bandwidth, rounds)


def balance_indices(samples: SampleSet, cfg: SubsampleConfig) -> tuple[np.ndarray, Optional[SubsampleResult]]:
    """Rows (in original order) of the balanced dataset and the subset search result.

    Returns all rows and ``None`` when the classes are already balanced.
    """
    if samples.labels is None:
        raise InputError("balancing needs labelled samples")
    classes, counts = np.unique(samples.labels, return_counts=True)
    if classes.size != 2:
        raise InputError(f"expected exactly two classes, found {classes.size}")
    if counts[0] == counts[1]:
        log.info("classes already balanced (%d each); returning the input unchanged", counts[0])
        return np.arange(samples.n), None
    major = classes[np.argmax(counts)]
    major_rows = np.flatnonzero(samples.labels == major)
    minor_rows = np.flatnonzero(samples.labels != major)
    target = len(minor_rows) if cfg.target_size is None else cfg.target_size
    result = select_subset(samples.data[major_rows], replace(cfg, target_size=target))
    rows = np.sort(np.concatenate([minor_rows, major_rows[result.indices]]))
    return rows, result


def balance_dataset(samples: SampleSet, cfg: SubsampleConfig = SubsampleConfig()) -> SampleSet:
    """Minority rows plus the selected majority rows, in original row order."""
    rows, _ = balance_indices(samples, cfg)
    return SampleSet(samples.data[rows], samples.labels[rows])


def synthetic_imbalanced(n_majority: int, ratio: float, d: int = 2, seed: int = 0) -> SampleSet:
    """Majority class (label 0) from three unequal Gaussian clusters, minority (label 1) from one."""
    rng = np.random.default_rng(seed)
    n_minor = max(1, int(round(n_majority / ratio)))
    centers = np.zeros((3, d))
    centers[1, 0], centers[2, :] = 3.0, -2.0
    which = rng.choice(3, size=n_majority, p=[0.6, 0.3, 0.1])
    major = centers[which] + rng.standard_normal((n_majority, d)) * np.array([1.0, 0.6, 0.4])[which, None]
    minor = rng.standard_normal((n_minor, d)) * 0.8 + 1.5
    data = np.vstack([major, minor])
    labels = np.r_[np.zeros(n_majority, dtype=int), np.ones(n_minor, dtype=int)]
    return SampleSet(data, labels)
