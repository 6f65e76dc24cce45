"""Command-line front end: ``jrdiv {entropy,divergence,test,subsample,sweep}``.

Every command prints (or writes with ``--out``) a JSON document with the keys
``command``, ``result`` and ``manifest``. The manifest holds the arguments,
resolved settings and input digests; ``jrdiv --manifest DOC`` replays it and
produces a byte-identical document.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .csvio import load_csv, sha256_file, write_rows
from .errors import ConfigurationError, InputError, JrdError, NumericalError, ParseError
from .jrd import divergence
from .kernels import BandwidthRule, KernelSpec, gram_matrix
from .rff import sample_rff
from .spectral import check_alpha, entropy_alpha, spectrum
from .subsample import SubsampleConfig, Strategy, balance_indices
from .two_sample import Family, SweepSpec, TestConfig, permutation_test, rejection_sweep

log = logging.getLogger("jrdiv")

EXIT_OK = 0
EXIT_PARSE = 3
EXIT_CONFIG = 4
EXIT_NUMERICAL = 5

DEFAULT_ALPHA = 1.01


def parse_bandwidth(text: str) -> KernelSpec:
    """``median``, ``mean-sqdist`` or ``fixed:<sigma>``."""
    if text.startswith("fixed:"):
        try:
            return KernelSpec.fixed(float(text.split(":", 1)[1]))
        except (ValueError, InputError) as exc:
            raise ConfigurationError(f"bad fixed bandwidth {text!r}: {exc}") from None
    try:
        rule = BandwidthRule(text)
    except ValueError:
        raise ConfigurationError(f"unknown bandwidth {text!r}; use median, mean-sqdist or fixed:<v>") from None
    if rule is BandwidthRule.FIXED:
        raise ConfigurationError("use fixed:<value> for a fixed bandwidth")
    return KernelSpec(rule=rule)


def _load(path, args, label_column=None):
    return load_csv(path, has_header=args.header, label_column=label_column)


def _input(path) -> dict:
    return {"path": str(path), "sha256": sha256_file(path)}


# --- commands ---------------------------------------------------------------


def cmd_entropy(args) -> tuple[dict, dict, list]:
    alpha = check_alpha(args.alpha)
    X = _load(args.file, args).samples.data
    spec_a = parse_bandwidth(args.bandwidth).resolve(X)
    K_A = gram_matrix(X, spec_a)
    result = {"alpha": alpha, "n": len(X), "entropy": entropy_alpha(spectrum(K_A), alpha)}
    resolved = {"bandwidth": spec_a.bandwidth}
    inputs = [_input(args.file)]
    if args.joint is not None:
        Y = _load(args.joint, args).samples.data
        if len(Y) != len(X):
            raise InputError(f"joint entropy needs paired rows: {len(X)} vs {len(Y)}")
        spec_b = parse_bandwidth(args.bandwidth).resolve(Y)
        K_B = gram_matrix(Y, spec_b)
        result["entropy_second"] = entropy_alpha(spectrum(K_B), alpha)
        result["joint_entropy"] = entropy_alpha(spectrum(K_A * K_B), alpha)
        result["mutual_information"] = result["entropy"] + result["entropy_second"] - result["joint_entropy"]
        resolved["bandwidth_second"] = spec_b.bandwidth
        inputs.append(_input(args.joint))
    return result, resolved, inputs


def cmd_divergence(args):
    alpha = check_alpha(args.alpha)
    X = _load(args.file_x, args).samples.data
    Y = _load(args.file_y, args).samples.data
    if X.shape[1] != Y.shape[1]:
        raise InputError(f"feature dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    spec = parse_bandwidth(args.bandwidth).resolve(np.vstack([X, Y]))
    rff_map = None
    resolved = {"bandwidth": spec.bandwidth}
    if args.method == "rff":
        rff_map = sample_rff(X.shape[1], args.rff, spec.bandwidth, args.seed)
        resolved.update(rff_features=args.rff, rff_seed=args.seed)
    res = divergence(X, Y, spec, alpha, args.method, rff_map)
    return res.to_dict(), resolved, [_input(args.file_x), _input(args.file_y)]


def cmd_test(args):
    X = _load(args.file_x, args).samples.data
    Y = _load(args.file_y, args).samples.data
    spec = parse_bandwidth(args.bandwidth)
    cfg = TestConfig(
        statistic=args.stat,
        alpha=args.alpha,
        method="rff" if args.rff else "exact",
        n_features=args.rff or 1024,
        permutations=args.permutations,
        tau=args.tau,
        seed=args.seed,
        bandwidth_rule=spec.rule,
        bandwidth=spec.bandwidth,
    )
    res = permutation_test(X, Y, cfg)
    resolved = {"bandwidth": res.bandwidth, "permutations": cfg.permutations, "tau": cfg.tau,
                "permutation_streams": "numpy default_rng([seed, b]) for b in 0..B-1"}
    return res.to_dict(), resolved, [_input(args.file_x), _input(args.file_y)]


def cmd_subsample(args):
    label = args.label_column
    table = load_csv(args.file, has_header=args.header, label_column=_default_label(args, label))
    cfg = SubsampleConfig(
        target_size=args.target_size,
        alpha=args.alpha,
        strategy=args.strategy,
        rff_features=args.rff,
        seed=args.seed,
        max_swap_rounds=args.max_swap_rounds,
        restarts=args.restarts,
    )
    rows, res = balance_indices(table.samples, cfg)
    out_path = args.balanced_out or str(Path(args.file).with_suffix("")) + ".balanced.csv"
    write_rows(table, rows, out_path)
    labels = table.samples.labels[rows]
    classes, counts = np.unique(labels, return_counts=True)
    result = {
        "balanced_path": out_path,
        "balanced_sha256": sha256_file(out_path),
        "rows": [int(r) for r in rows],
        "class_counts": {str(int(c)): int(k) for c, k in zip(classes, counts)},
        "already_balanced": res is None,
    }
    resolved = {"label_column": table.label_index}
    if res is None:
        print("notice: classes already balanced; output equals input", file=sys.stderr)
    else:
        result.update(res.to_dict())
        resolved["bandwidth"] = res.bandwidth
    return result, resolved, [_input(args.file)]


def _default_label(args, label):
    if label is not None:
        return label
    head = load_csv(args.file, has_header=args.header)
    if head.header is not None and "label" in head.header:
        return "label"
    return -1


def cmd_sweep(args):
    spec = SweepSpec(
        family=args.family,
        dims=tuple(args.dims),
        grid=tuple(args.grid) if args.grid else None,
        n=args.n,
        trials=args.trials,
        alphas=tuple(args.alphas),
        include_mmd=not args.no_mmd,
    )
    cfg = TestConfig(permutations=args.permutations, tau=args.tau, seed=args.seed)
    table = rejection_sweep(spec, cfg)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, ["dim", "statistic", "grid_value", "rejections", "trials"],
                                    lineterminator="\n")
            writer.writeheader()
            writer.writerows(table.cells)
    resolved = {"grid": list(spec.grid), "bandwidth_rule": cfg.bandwidth_rule.value}
    return {"summary": table.summary(), "cells": table.cells}, resolved, []


COMMANDS = {
    "entropy": cmd_entropy,
    "divergence": cmd_divergence,
    "test": cmd_test,
    "subsample": cmd_subsample,
    "sweep": cmd_sweep,
}


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jrdiv", description="Representation Jensen-Renyi divergence tools")
    parser.add_argument("--version", action="version", version=f"jrdiv {__version__}")
    parser.add_argument("--manifest", help="replay the run recorded in a result document or manifest file")
    parser.add_argument("--out", help="write the result document here instead of stdout")
    parser.add_argument("-v", "--verbose", action="store_true")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=argparse.SUPPRESS, help="write the result document here")
    header = common.add_mutually_exclusive_group()
    header.add_argument("--header", dest="header", action="store_true", default=None)
    header.add_argument("--no-header", dest="header", action="store_false")
    common.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    common.add_argument("--seed", type=int, default=0)

    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("entropy", parents=[common], help="matrix-based Renyi entropy of a sample")
    p.add_argument("file")
    p.add_argument("--joint", help="second file, rows paired with the first")
    p.add_argument("--bandwidth", default="median")

    p = sub.add_parser("divergence", parents=[common], help="divergence between two samples")
    p.add_argument("file_x")
    p.add_argument("file_y")
    p.add_argument("--bandwidth", default="median")
    p.add_argument("--method", choices=["exact", "population", "block", "rff"], default="exact")
    p.add_argument("--rff", type=int, default=1024, help="random feature count for --method rff")

    p = sub.add_parser("test", parents=[common], help="permutation two-sample test")
    p.add_argument("file_x")
    p.add_argument("file_y")
    p.add_argument("--stat", choices=["jrd", "mmd"], default="jrd")
    p.add_argument("--permutations", type=int, default=199)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--bandwidth", default="mean-sqdist")
    p.add_argument("--rff", type=int, default=None, help="use random features for the statistic")

    p = sub.add_parser("subsample", parents=[common], help="balance a labelled dataset")
    p.add_argument("file")
    p.add_argument("--label-column", default=None, help="name or index (default: 'label', else last)")
    p.add_argument("--target-size", type=int, default=None)
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default=Strategy.GREEDY_SWAP.value)
    p.add_argument("--rff", type=int, default=None)
    p.add_argument("--max-swap-rounds", type=int, default=SubsampleConfig.max_swap_rounds)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--balanced-out", default=None)

    p = sub.add_parser("sweep", parents=[common], help="rejection-rate sweep on synthetic Gaussians")
    p.add_argument("--family", choices=[f.value for f in Family], default=Family.MEAN_SHIFT.value)
    p.add_argument("--dims", type=int, nargs="+", default=[1])
    p.add_argument("--grid", type=float, nargs="+", default=None)
    p.add_argument("--n", type=int, default=250)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--alphas", type=float, nargs="+", default=[1.01, 2.0, 5.0])
    p.add_argument("--no-mmd", action="store_true")
    p.add_argument("--permutations", type=int, default=199)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--csv", default=None, help="also write per-cell rejection counts as CSV")
    return parser


_NON_REPLAY = {"manifest", "out", "verbose"}


def run(args: argparse.Namespace) -> dict:
    """Execute a parsed command and return its result document."""
    arguments = {k: v for k, v in sorted(vars(args).items()) if k not in _NON_REPLAY}
    result, resolved, inputs = COMMANDS[args.command](args)
    manifest = {
        "tool": "jrdiv",
        "version": __version__,
        "command": args.command,
        "arguments": arguments,
        "resolved": resolved,
        "inputs": inputs,
    }
    return {"command": args.command, "result": result, "manifest": manifest}


def replay_namespace(path) -> argparse.Namespace:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    manifest = doc.get("manifest", doc)
    if "command" not in manifest or "arguments" not in manifest:
        raise ConfigurationError(f"{path} does not contain a run manifest")
    for item in manifest.get("inputs", []):
        if sha256_file(item["path"]) != item["sha256"]:
            raise ConfigurationError(f"input {item['path']} changed since the recorded run")
    return argparse.Namespace(**manifest["arguments"])


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    out = getattr(args, "out", None)
    try:
        if args.manifest:
            args = replay_namespace(args.manifest)
        elif args.command is None:
            parser.print_usage(sys.stderr)
            return 2
        start = time.perf_counter()
        doc = run(args)
        log.info("%s finished in %.3f s", args.command, time.perf_counter() - start)
    except ParseError as exc:
        print(f"jrdiv: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigurationError, InputError) as exc:
        print(f"jrdiv: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"jrdiv: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except JrdError as exc:
        print(f"jrdiv: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = dumps(doc)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
