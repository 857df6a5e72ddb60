"""
Command-line front end for the experiments.

    anova-approx --experiment synthetic-lsqr --preset small --reps 5 --out results/small.csv

Exit codes: 0 on success, 2 for configuration errors, 1 for I/O and data errors.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from app.core.config import get_settings
from app.core.errors import AnovaError, ConfigurationError, DatasetError
from app.core.logging import configure_logging
from app.models.experiment import BandwidthPreset, ExperimentConfig, ExperimentKind
from app.services.experiments import run_experiment

logger = logging.getLogger("app.cli")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anova-approx",
        description="Grouped-transform ANOVA approximation experiments",
    )
    parser.add_argument("--config", type=Path, help="JSON experiment configuration")
    parser.add_argument("--experiment", choices=[k.value for k in ExperimentKind])
    parser.add_argument("--preset", choices=[p.value for p in BandwidthPreset])
    parser.add_argument("--bandwidths", type=int, nargs="+", help="explicit per-order bandwidths")
    parser.add_argument("--refit-bandwidths", type=int, nargs="+", help="per-order bandwidths of the refit")
    parser.add_argument("--superposition", type=int, help="superposition threshold d_s")
    parser.add_argument("--smoothness", type=float, help="Sobolev weight smoothness s")
    parser.add_argument("--noise", type=float, help="noise level")
    parser.add_argument("--noise-mode", choices=["relative", "absolute"])
    parser.add_argument("--samples", type=int, help="number of sampling nodes M")
    parser.add_argument("--lambda-min", type=float)
    parser.add_argument("--lambda-max", type=float)
    parser.add_argument("--lambda-count", type=int)
    parser.add_argument("--reps", type=int, help="repetitions averaged per lambda")
    parser.add_argument("--folds", type=int, help="cross-validation folds (1: single split)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", type=Path, help="result CSV path")
    parser.add_argument("--threads", type=int)
    parser.add_argument("--prox-exempt-mean", action="store_true", default=None,
                        help="leave the constant term unpenalized in the group lasso")
    parser.add_argument("--emit-network", type=Path, help="write the ANOVA network as DOT")
    parser.add_argument("--census-csv", type=Path, help="census CSV file")
    parser.add_argument("--log-level", help="logging level (default from ANOVA_LOG_LEVEL)")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {
        "experiment": args.experiment,
        "preset": args.preset,
        "bandwidths": args.bandwidths,
        "refit_bandwidths": args.refit_bandwidths,
        "superposition": args.superposition,
        "smoothness": args.smoothness,
        "noise": args.noise,
        "noise_mode": args.noise_mode,
        "samples": args.samples,
        "lambda_min": args.lambda_min,
        "lambda_max": args.lambda_max,
        "lambda_count": args.lambda_count,
        "reps": args.reps,
        "folds": args.folds,
        "seed": args.seed,
        "out": args.out,
        "threads": args.threads,
        "emit_network": args.emit_network,
        "census_csv": args.census_csv,
    }
    try:
        config = ExperimentConfig.from_json(args.config, **overrides)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"Cannot read configuration {args.config}: {e}")
    if args.prox_exempt_mean:
        config.fista.exempt_mean = True
    return config


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings()
        configure_logging(args.log_level or settings.log_level)
        config = load_config(args)
        result = run_experiment(config, settings)
    except (DatasetError, OSError) as e:
        logger.error("%s", e)
        return 1
    except (AnovaError, ValidationError, ValueError) as e:
        logger.error("Configuration error: %s", e)
        return 2
    for path in result.paths:
        print(path)
    logger.info("summary: %s", json.dumps(result.summary, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
