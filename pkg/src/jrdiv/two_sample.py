"""Permutation two-sample tests with the divergence (or biased MMD) as statistic.

Also contains the synthetic Gaussian mean-shift / variance-shift generators and
the rejection-rate sweep used to study test power.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, InputError
from .jrd import _pair, jrd_from_power_sums
from .kernels import ArrayLike, BandwidthRule, KernelSpec, cross_gram, gram_matrix
from .rff import feature_map, sample_rff
from .spectral import EIG_FLOOR, check_alpha, eigvalsh_checked

TIE_TOL = 1e-12


def _rng(seed, *keys) -> np.random.Generator:
    base = list(seed) if isinstance(seed, (list, tuple)) else [seed]
    return np.random.default_rng([int(s) for s in (*base, *keys)])


# --- synthetic data ---------------------------------------------------------


def gen_mean_shift(n: int, d: int, distance: float, seed) -> tuple[np.ndarray, np.ndarray]:
    """``X ~ N(0, I)``, ``Y ~ N(mu, I)`` with ``mu`` on the first axis at ``distance``."""
    if distance < 0:
        raise InputError("distance must be nonnegative")
    rng = _rng(seed)
    X = rng.standard_normal((n, d))
    Y = rng.standard_normal((n, d))
    Y[:, 0] += distance
    return X, Y


def gen_variance_shift(n: int, d: int, sigma2: float, seed) -> tuple[np.ndarray, np.ndarray]:
    """``X ~ N(0, I)``, ``Y ~ N(0, sigma2 I)``."""
    if not sigma2 > 0:
        raise InputError("sigma2 must be positive")
    rng = _rng(seed)
    X = rng.standard_normal((n, d))
    Y = math.sqrt(sigma2) * rng.standard_normal((n, d))
    return X, Y


# --- statistics -------------------------------------------------------------


def mmd_biased(X: ArrayLike, Y: ArrayLike, spec: KernelSpec) -> float:
    """Biased (V-statistic) squared MMD: ``mean K_XX + mean K_YY - 2 mean K_XY``."""
    X, Y = _pair(X, Y)
    spec = spec.resolve(np.vstack([X, Y]))
    value = gram_matrix(X, spec).mean() + gram_matrix(Y, spec).mean() - 2.0 * cross_gram(X, Y, spec).mean()
    return max(float(value), 0.0)


class Statistic(str, enum.Enum):
    JRD = "jrd"
    MMD = "mmd"


@dataclass(frozen=True)
class TestConfig:
    """Permutation-test settings.

    ``method`` selects the divergence evaluation (``exact`` or ``rff`` with
    ``n_features`` random features). A ``bandwidth`` overrides the rule.
    """

    __test__ = False

    statistic: Statistic = Statistic.JRD
    alpha: float = 2.0
    method: str = "exact"
    n_features: int = 1024
    permutations: int = 199
    tau: float = 0.05
    seed: int = 0
    bandwidth_rule: BandwidthRule = BandwidthRule.MEAN_SQDIST
    bandwidth: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "statistic", Statistic(self.statistic))
        object.__setattr__(self, "bandwidth_rule", BandwidthRule(self.bandwidth_rule))
        if self.permutations < 1:
            raise ConfigurationError(f"need at least one permutation, got {self.permutations}")
        if not 0.0 < self.tau < 1.0:
            raise ConfigurationError(f"significance level must lie in (0, 1), got {self.tau}")
        if self.method not in ("exact", "rff"):
            raise ConfigurationError(f"unknown test method {self.method!r}")
        if self.statistic is Statistic.JRD:
            check_alpha(self.alpha)

    def kernel(self) -> KernelSpec:
        if self.bandwidth is not None:
            return KernelSpec.fixed(self.bandwidth)
        if self.bandwidth_rule is BandwidthRule.FIXED:
            raise ConfigurationError("fixed bandwidth rule without a bandwidth value")
        return KernelSpec(rule=self.bandwidth_rule)


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    observed: float
    null_stats: np.ndarray
    p_value: float
    reject: bool
    statistic: str = "jrd"
    bandwidth: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "observed": self.observed,
            "p_value": self.p_value,
            "reject": self.reject,
            "bandwidth": self.bandwidth,
            "permutations": int(self.null_stats.size),
            "null_stats": [float(v) for v in self.null_stats],
        }


def p_value(observed: float, null_stats) -> float:
    """Add-one permutation p-value ``(1 + #{null >= observed}) / (B + 1)``."""
    null_stats = np.asarray(null_stats, dtype=float)
    tol = TIE_TOL * max(1.0, abs(observed))
    return (1 + int(np.sum(null_stats >= observed - tol))) / (null_stats.size + 1)


def stat_label(statistic: Statistic, alpha: float | None = None) -> str:
    return "mmd" if Statistic(statistic) is Statistic.MMD else f"jrd[{alpha:g}]"


class _PooledStatistics:
    """Evaluates several statistics for arbitrary (interleaved) sample labels.

    The pooled Gram matrix or feature matrix is computed once. The pooled
    spectrum is label-free; for the joint term, ``K_Z * L_Z`` is permutation
    similar to a block-diagonal matrix, so its eigenvalues are those of the two
    label blocks of ``K_Z``.
    """

    def __init__(self, Z: np.ndarray, alphas: Sequence[float], mmd: bool, spec: KernelSpec,
                 features: Optional[np.ndarray] = None):
        self.total = len(Z)
        self.alphas = [check_alpha(a) for a in alphas]
        self.mmd = mmd
        self.features = features
        self.K = gram_matrix(Z, spec) if (features is None or mmd) else None
        self._square_only = features is None and all(a == 2.0 for a in self.alphas)
        if self._square_only:
            self._K2 = self.K * self.K
        self._covariance = features is not None and self.total > 2 * features.shape[1]
        if self.alphas:
            pooled = self._eigenvalues(np.ones(self.total, dtype=bool))
            self.pooled_sums = [self._power_sum(pooled, a) for a in self.alphas]

    @staticmethod
    def _power_sum(vals: np.ndarray, alpha: float) -> float:
        v = vals[vals >= EIG_FLOOR]
        return float(np.sum(v ** alpha))

    def _eigenvalues(self, mask: np.ndarray) -> np.ndarray:
        if self.features is None:
            idx = np.flatnonzero(mask)
            return eigvalsh_checked(self.K[np.ix_(idx, idx)] / self.total)
        F = self.features[mask]
        if self._covariance:
            return eigvalsh_checked(F.T @ F / self.total)
        return eigvalsh_checked(F @ F.T / self.total)

    def evaluate(self, mask: np.ndarray) -> list[float]:
        n = int(mask.sum())
        m = self.total - n
        out = []
        if self.alphas:
            if self._square_only:
                a = mask.astype(float)
                b = 1.0 - a
                block = float(a @ self._K2 @ a + b @ self._K2 @ b) / self.total**2
                block_sums = [block] * len(self.alphas)
            else:
                vals = np.concatenate([self._eigenvalues(mask), self._eigenvalues(~mask)])
                block_sums = [self._power_sum(vals, a) for a in self.alphas]
            for alpha, pooled, block in zip(self.alphas, self.pooled_sums, block_sums):
                out.append(jrd_from_power_sums(pooled, block, n, m, alpha))
        if self.mmd:
            w = np.where(mask, 1.0 / n, -1.0 / m)
            out.append(max(float(w @ self.K @ w), 0.0))
        return out


def _run_tests(X, Y, alphas, mmd, cfg: TestConfig) -> dict[str, TestResult]:
    X, Y = _pair(X, Y)
    Z = np.vstack([X, Y])
    spec = cfg.kernel().resolve(Z)
    features = None
    if cfg.method == "rff" and alphas:
        rff_seed = int(_rng(cfg.seed, 2**31).integers(2**31))
        rff_map = sample_rff(Z.shape[1], cfg.n_features, spec.bandwidth, rff_seed)
        features = feature_map(rff_map, Z)
    engine = _PooledStatistics(Z, alphas, mmd, spec, features)
    mask = np.zeros(len(Z), dtype=bool)
    mask[: len(X)] = True
    observed = engine.evaluate(mask)
    null = np.empty((cfg.permutations, len(observed)))
    for b in range(cfg.permutations):
        perm = _rng(cfg.seed, b).permutation(len(Z))
        shuffled = np.zeros(len(Z), dtype=bool)
        shuffled[perm[: len(X)]] = True
        null[b] = engine.evaluate(shuffled)
    labels = [stat_label(Statistic.JRD, a) for a in alphas] + (["mmd"] if mmd else [])
    results = {}
    for j, label in enumerate(labels):
        p = p_value(observed[j], null[:, j])
        results[label] = TestResult(observed[j], null[:, j].copy(), p, p <= cfg.tau, label, spec.bandwidth)
    return results


def permutation_test(X: ArrayLike, Y: ArrayLike, cfg: TestConfig = TestConfig()) -> TestResult:
    """Permutation test of ``P_X == P_Y``.

    The bandwidth is fixed on the pooled sample before permuting; each
    permutation ``b`` draws from its own generator seeded by ``(seed, b)``.
    """
    if cfg.statistic is Statistic.MMD:
        return _run_tests(X, Y, [], True, cfg)["mmd"]
    return _run_tests(X, Y, [cfg.alpha], False, cfg)[stat_label(Statistic.JRD, cfg.alpha)]


def permutation_tests(X: ArrayLike, Y: ArrayLike, alphas: Sequence[float], include_mmd: bool,
                      cfg: TestConfig = TestConfig()) -> dict[str, TestResult]:
    """Several statistics tested against the same permutations.

    Keys are ``"jrd[<alpha>]"`` and ``"mmd"``.
    """
    return _run_tests(X, Y, list(alphas), include_mmd, cfg)


# --- sweeps -----------------------------------------------------------------


class Family(str, enum.Enum):
    MEAN_SHIFT = "mean-shift"
    VARIANCE_SHIFT = "variance-shift"


def default_grid(family) -> np.ndarray:
    """20 log-spaced shift parameters (distances 0.05..50, or variances 10^0.01..10)."""
    if Family(family) is Family.MEAN_SHIFT:
        return np.logspace(math.log10(0.05), math.log10(50.0), 20)
    return np.logspace(0.01, 1.0, 20)


@dataclass(frozen=True)
class SweepSpec:
    family: Family = Family.MEAN_SHIFT
    dims: tuple = (1,)
    grid: Optional[tuple] = None
    n: int = 250
    trials: int = 10
    alphas: tuple = (1.01, 2.0, 5.0)
    include_mmd: bool = True

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        grid = default_grid(self.family) if self.grid is None else self.grid
        object.__setattr__(self, "grid", tuple(float(g) for g in grid))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "alphas", tuple(check_alpha(a) for a in self.alphas))
        if self.trials < 0 or self.n < 2:
            raise ConfigurationError("need trials >= 0 and n >= 2")


@dataclass
class SweepTable:
    """Rejection counts per ``(dim, statistic, grid value)`` cell."""

    cells: list = field(default_factory=list)

    def summary(self) -> list[dict]:
        """Mean rejection rate per ``(dim, statistic)`` over the grid and trials."""
        groups: dict = {}
        for c in self.cells:
            key = (c["dim"], c["statistic"])
            rej, tot = groups.get(key, (0, 0))
            groups[key] = (rej + c["rejections"], tot + c["trials"])
        return [
            {"dim": d, "statistic": s, "rate": rej / tot, "tests": tot}
            for (d, s), (rej, tot) in groups.items()
        ]

    def rate(self, dim: int, statistic: str, grid_value: float | None = None) -> float:
        rej = tot = 0
        for c in self.cells:
            if c["dim"] == dim and c["statistic"] == statistic and (
                grid_value is None or c["grid_value"] == grid_value
            ):
                rej += c["rejections"]
                tot += c["trials"]
        if tot == 0:
            raise KeyError((dim, statistic, grid_value))
        return rej / tot


def rejection_sweep(spec: SweepSpec, cfg: TestConfig = TestConfig()) -> SweepTable:
    """Rejection rates of every statistic on every ``(dim, grid value)`` cell.

    Trial ``t`` of grid point ``g`` at dimension ``d`` draws its data with seed
    ``(cfg.seed, d, g, t)`` and its permutations from ``(cfg.seed, d, g, t, b)``.
    """
    generate = gen_mean_shift if spec.family is Family.MEAN_SHIFT else gen_variance_shift
    table = SweepTable()
    if spec.trials == 0:
        return table
    for d in spec.dims:
        for g, value in enumerate(spec.grid):
            counts: dict = {}
            for t in range(spec.trials):
                X, Y = generate(spec.n, d, value, (cfg.seed, d, g, t))
                trial_cfg = replace(cfg, seed=(cfg.seed, d, g, t))
                results = _run_tests(X, Y, list(spec.alphas), spec.include_mmd, trial_cfg)
                for label, res in results.items():
                    counts[label] = counts.get(label, 0) + int(res.reject)
            for label, rej in counts.items():
                table.cells.append(
                    {"dim": d, "statistic": label, "grid_value": value, "rejections": rej, "trials": spec.trials}
                )
    return table
