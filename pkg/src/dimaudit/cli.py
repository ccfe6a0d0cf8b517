"""Command-line entry point: ``dimaudit <subcommand> [--config F] [--seed S] [--out DIR]``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import STAGES, AuditConfig, help_text
from .errors import StageError
from .ingest import DEFAULT_ATTRIBUTES
from .pipeline import REPORT_NAME, run_pipeline
from .synth import four_factor_spec, generate, noise_spec, one_factor_spec, write_csv

SYNTH_KINDS = {
    "four-factor": lambda n, p, seed: four_factor_spec(n=n, p=p, seed=seed),
    "one-factor": lambda n, p, seed: one_factor_spec(n=n, p=p, seed=seed),
    "noise": lambda n, p, seed: noise_spec(n=n, p=p, seed=seed),
}


def _global_flags(suppress: bool = False) -> argparse.ArgumentParser:
    # subcommand copies must not reset flags given before the subcommand
    extra = {"default": argparse.SUPPRESS} if suppress else {}
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value run configuration file", **extra)
    common.add_argument("--seed", type=int, help="master seed (overrides config) [0]", **extra)
    common.add_argument("--out", help="output directory (overrides config) [audit_out]", **extra)
    common.add_argument("--input", help="rating CSV (overrides config 'input')", **extra)
    common.add_argument("--workers", type=int, help="worker threads (overrides config) [1]",
                        **extra)
    common.add_argument("-v", "--verbose", action="store_true", help="log stage progress", **extra)
    return common


def build_parser() -> argparse.ArgumentParser:
    top = _global_flags()
    common = _global_flags(suppress=True)
    parser = argparse.ArgumentParser(
        prog="dimaudit",
        description="Dimensional diagnostics for multi-attribute rating tables.",
        epilog=help_text(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
        parents=[top],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run every stage enabled in the config")
    blurbs = {
        "describe": "descriptive statistics for the rating and every attribute",
        "alpha": "Cronbach's alpha and average inter-item correlation",
        "pca": "eigenvalues, variance shares, PC1 loadings, correlation matrix",
        "parallel": "parallel analysis against Gaussian noise",
        "bootstrap": "bootstrap stability of PC1",
        "predict": "cross-validated PC1-only vs ridge prediction",
        "cluster": "k-means on residual component scores",
        "forest": "random-forest cross-validated benchmark",
    }
    for name in STAGES:
        sub.add_parser(name, parents=[common], help=blurbs[name])
    synth = sub.add_parser("synth", parents=[common], help="write a planted-factor CSV")
    synth.add_argument("--kind", choices=sorted(SYNTH_KINDS), default="four-factor",
                       help="generator preset [four-factor]")
    synth.add_argument("--n", type=int, default=2000, help="rows [2000]")
    synth.add_argument("--p", type=int, default=28, help="attributes [28]")
    synth.add_argument("--output", required=True, help="CSV path to write")
    return parser


def _config(args) -> AuditConfig:
    cfg = AuditConfig.from_file(args.config) if args.config else AuditConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    if args.input is not None:
        overrides["input"] = args.input
    if args.workers is not None:
        overrides["workers"] = args.workers
    return replace(cfg, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _config(args)
        if args.command == "synth":
            spec = SYNTH_KINDS[args.kind](args.n, args.p, cfg.seed)
            if args.p == len(DEFAULT_ATTRIBUTES):
                # default column names, so the default config reads the file as-is
                spec = replace(spec, attribute_names=DEFAULT_ATTRIBUTES)
            data = generate(spec)
            path = write_csv(data, args.output)
            print(f"wrote {data.matrix.n} x {data.matrix.p} planted data to {path}")
            return 0
        if args.command != "run":
            cfg = cfg.with_stages([args.command])
        run_pipeline(cfg)
    except StageError as exc:
        print(f"dimaudit: error in stage '{exc.stage}': {exc.cause}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"dimaudit: error: {exc}", file=sys.stderr)
        return 1
    print(f"report written to {Path(cfg.out) / REPORT_NAME}")
    return 0
