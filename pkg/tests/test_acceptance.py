"""Exit criteria 1-11. Each test records one PASS/FAIL line, printed in the summary."""

import json
import math
import time

import numpy as np
import pytest

from jrdiv import (
    KernelSpec,
    SubsampleConfig,
    evaluate_subset,
    jrd_block,
    jrd_exact,
    jrd_population_form,
    jrd_rff,
    sample_rff,
    select_subset,
    spectrum,
    trace_ratio,
)
from jrdiv.cli import main
from jrdiv.subsample import majority_kernel, synthetic_imbalanced
from jrdiv.two_sample import (
    SweepSpec,
    TestConfig,
    gen_mean_shift,
    permutation_tests,
    rejection_sweep,
)

from _oracles import random_unit_psd
from conftest import ACCEPTANCE_LINES

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

ALPHAS = (1.01, 2.0, 5.0)
MEDIAN = KernelSpec(rule="median")


def verdict(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert ok, line


def gaussian_instances():
    rng = np.random.default_rng(20240601)
    out = []
    for _ in range(100):
        n = int(rng.integers(2, 101))
        d = int(rng.integers(1, 6))
        X = rng.standard_normal((n, d))
        Y = rng.standard_normal((n, d)) * rng.uniform(0.5, 2.0) + rng.uniform(0.0, 2.0)
        out.append((X, Y, rng.permutation(n)))
    return out


@pytest.fixture(scope="module")
def instances():
    return gaussian_instances()


def test_criterion_01_spectral_correctness():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst_mass = worst_tr = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 61))
        K = random_unit_psd(rng, n)
        s = spectrum(K)
        worst_mass = max(worst_mass, abs(s.mass - 1.0))
        explicit = float(np.trace(np.linalg.matrix_power(K / n, 2)))
        worst_tr = max(worst_tr, abs(float(np.sum(s.values**2)) - explicit))
    elapsed = time.perf_counter() - start
    ok = worst_mass <= 1e-8 and worst_tr <= 1e-8 and elapsed < 10
    verdict(1, ok, f"max|sum-1|={worst_mass:.1e} max|trK2 diff|={worst_tr:.1e} time={elapsed:.2f}s")


def test_criterion_02_divergence_properties(instances):
    start = time.perf_counter()
    sym = perm = excess = 0.0
    for X, Y, pi in instances:
        for a in ALPHAS:
            d_xy = jrd_exact(X, Y, MEDIAN, a).value
            sym = max(sym, abs(d_xy - jrd_exact(Y, X, MEDIAN, a).value))
            perm = max(perm, jrd_exact(X, X[pi], MEDIAN, a).value)
            excess = max(excess, d_xy - math.log(2.0))
    elapsed = time.perf_counter() - start
    ok = sym <= 1e-10 and perm <= 1e-8 and excess <= 1e-8 and elapsed < 60
    verdict(2, ok, f"symmetry={sym:.1e} permutation={perm:.1e} max(D-log2)={excess:.3f} time={elapsed:.1f}s")


def test_criterion_03_path_equivalence(instances):
    worst = 0.0
    for X, Y, _ in instances:
        for a in ALPHAS:
            e = jrd_exact(X, Y, MEDIAN, a).raw_value
            p = jrd_population_form(X, Y, MEDIAN, a).raw_value
            b = jrd_block(X, Y, MEDIAN, a).raw_value
            worst = max(worst, abs(e - p), abs(e - b))
    verdict(3, worst <= 1e-8, f"max path disagreement={worst:.1e}")


def test_criterion_04_closed_form():
    y = math.sqrt(2.0 * math.log(2.0))
    value = jrd_exact([[0.0]], [[y]], KernelSpec.fixed(1.0), 2.0).value
    err = abs(value - math.log(1.6))
    verdict(4, err <= 1e-10, f"value={value:.9f} |err|={err:.1e}")


def test_criterion_05_null_calibration():
    reps = 200
    rejections = {"jrd[2]": 0, "mmd": 0}
    for r in range(reps):
        X, Y = gen_mean_shift(250, 4, 0.0, (5, r))
        res = permutation_tests(X, Y, [2.0], True, TestConfig(permutations=199, tau=0.05, seed=r))
        for key in rejections:
            rejections[key] += int(res[key].reject)
    rates = {k: v / reps for k, v in rejections.items()}
    ok = all(0.02 <= v <= 0.08 for v in rates.values())
    verdict(5, ok, f"null rejection rates {rates}")


def test_criterion_06_power_saturation():
    spec = SweepSpec(dims=(1, 4), grid=(50.0,), n=250, trials=50, alphas=ALPHAS, include_mmd=False)
    table = rejection_sweep(spec, TestConfig(permutations=199, seed=6))
    rates = {(row["dim"], row["statistic"]): row["rate"] for row in table.summary()}
    ok = len(rates) == 6 and all(v == 1.0 for v in rates.values())
    verdict(6, ok, f"min rate={min(rates.values()):.2f} over d in (1, 4) and alpha in {ALPHAS}")


def test_criterion_07_variance_sensitivity():
    spec = SweepSpec(family="variance-shift", dims=(10,), grid=(4.0,), n=250, trials=100,
                     alphas=(1.01, 5.0), include_mmd=False)
    diffs, detail = [], []
    for seed in range(3):
        table = rejection_sweep(spec, TestConfig(permutations=199, seed=70 + seed))
        low, high = table.rate(10, "jrd[1.01]"), table.rate(10, "jrd[5]")
        diffs.append(high - low)
        detail.append(f"seed{seed}: a=5 {high:.2f} vs a=1.01 {low:.2f}")
    ok = float(np.median(diffs)) >= -0.05
    verdict(7, ok, "; ".join(detail))


def test_criterion_08_concentration():
    spec = KernelSpec.fixed(1.0)
    sd = {}
    for n in (100, 400):
        ratios = [trace_ratio(*gen_mean_shift(n, 2, 1.0, (8, n, s)), spec, 2.0) for s in range(100)]
        sd[n] = float(np.std(ratios, ddof=1))
    q = sd[400] / sd[100]
    verdict(8, 0.3 <= q <= 0.8, f"sd(N=400)/sd(N=100)={q:.3f}")


def test_criterion_09_rff_consistency():
    X, Y = gen_mean_shift(500, 5, 1.0, 9)
    spec = MEDIAN.resolve(np.vstack([X, Y]))
    exact = jrd_exact(X, Y, spec, 1.01).value
    medians = []
    for D in (256, 512, 1024, 4096):
        errs = [abs(jrd_rff(X, Y, sample_rff(5, D, spec.bandwidth, s), 1.01).value - exact) for s in range(20)]
        medians.append(float(np.median(errs)))
    ok = all(b <= a for a, b in zip(medians, medians[1:])) and medians[-1] <= 0.02
    verdict(9, ok, "median errors " + ", ".join(f"{m:.4f}" for m in medians))


def test_criterion_10_subsampling_quality():
    wins = []
    for inst in range(10):
        s = synthetic_imbalanced(400, 10, d=2, seed=100 + inst)
        X = s.data[s.labels == 0]
        M = int(np.sum(s.labels == 1))
        chosen = select_subset(X, SubsampleConfig(target_size=M)).final_divergence
        spec = majority_kernel(X)
        rng = np.random.default_rng([10, inst])
        rand = [evaluate_subset(rng.choice(len(X), M, replace=False), X, spec) for _ in range(100)]
        wins.append(chosen <= np.percentile(rand, 25))
    hits = 0
    for inst in range(50):
        X = np.random.default_rng([11, inst]).standard_normal((6, 2))
        spec = majority_kernel(X)
        best = min(evaluate_subset(c, X, spec) for c in
                   ((i, j) for i in range(6) for j in range(i + 1, 6)))
        r = select_subset(X, SubsampleConfig(target_size=2, restarts=5, seed=inst))
        hits += r.final_divergence <= best + 1e-9
    ok = all(wins) and hits >= 40
    verdict(10, ok, f"beats 25th percentile on {sum(wins)}/10; exhaustive optimum on {hits}/50 micro-instances")


def test_criterion_11_cli_reproducibility(tmp_path, capsys):
    rng = np.random.default_rng(12)
    x, y = tmp_path / "x.csv", tmp_path / "y.csv"
    np.savetxt(x, rng.standard_normal((25, 2)), delimiter=",")
    np.savetxt(y, rng.standard_normal((25, 2)) + 1, delimiter=",")
    s = synthetic_imbalanced(40, 5, seed=1)
    d = tmp_path / "d.csv"
    np.savetxt(d, np.c_[s.data, s.labels], delimiter=",", header="a,b,label", comments="", fmt=["%.17g", "%.17g", "%d"])
    commands = {
        "entropy": ["entropy", x, "--joint", y, "--alpha", "2"],
        "divergence": ["divergence", x, y],
        "divergence-rff": ["divergence", x, y, "--method", "rff", "--rff", "128", "--seed", "3"],
        "test": ["test", x, y, "--permutations", "49", "--seed", "4"],
        "test-rff": ["test", x, y, "--rff", "64", "--permutations", "19"],
        "subsample": ["subsample", d, "--restarts", "2", "--seed", "2", "--balanced-out", tmp_path / "bal.csv"],
        "sweep": ["sweep", "--grid", "0", "1", "--n", "15", "--trials", "2", "--permutations", "9"],
    }
    same = {}
    for name, argv in commands.items():
        first, second = tmp_path / f"{name}.1.json", tmp_path / f"{name}.2.json"
        assert main([str(a) for a in argv] + ["--out", str(first)]) == 0
        assert main(["--manifest", str(first), "--out", str(second)]) == 0
        same[name] = first.read_bytes() == second.read_bytes() and bool(json.loads(first.read_text())["manifest"])
    capsys.readouterr()
    bad = [k for k, v in same.items() if not v]
    verdict(11, not bad, f"byte-identical replays {len(same) - len(bad)}/{len(same)}" + (f" failed: {bad}" if bad else ""))
