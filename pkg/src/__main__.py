#!/usr/bin/env python3
"""
Entry point for the ensemble-gp command line tool
"""

import argparse
import logging
import signal
import sys

from .core.runner import run_command
from .core.support.errors import EnsembleGPError, describe_error
from .utils.config import INPUT_FORMATS, RunConfig
from .core.bayesopt import SCORE_FUNCTIONS
from .core.pipeline import FREQUENCIES, SPLIT_MODES


def setup_global_signal_handlers():
    """Set up global signal handlers"""
    def signal_handler(signum, frame):
        print("\n👋 Interrupted, exiting...")
        sys.exit(130)

    signal.signal(signal.SIGINT, signal_handler)
    if hasattr(signal, 'SIGTERM'):
        signal.signal(signal.SIGTERM, signal_handler)


def _samples(value: str):
    if value == "all":
        return value
    try:
        count = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'all', got '{value}'")
    if count < 1:
        raise argparse.ArgumentTypeError("sample count must be >= 1")
    return count


def _flag(value: str) -> bool:
    lowered = value.lower()
    if lowered not in ("true", "false"):
        raise argparse.ArgumentTypeError(f"expected true or false, got '{value}'")
    return lowered == "true"


def build_parser() -> argparse.ArgumentParser:
    # Defaults are None so that unset flags never override the config file
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument('--config', help='JSON run configuration')
    shared.add_argument('--input', help='Transactions or series CSV')
    shared.add_argument('--input-format', dest='input_format', choices=INPUT_FORMATS,
                        help='How to read --input (default: series)')
    shared.add_argument('--mapping', help='brand,atc_code mapping CSV')
    shared.add_argument('--atc', help='ATC category code, e.g. M01AB')
    shared.add_argument('--freq', choices=sorted(FREQUENCIES), help='Aggregation period')
    shared.add_argument('--samples', type=_samples, help="Points to sample from the series, or 'all'")
    shared.add_argument('--train-frac', dest='train_frac', type=float, help='Train fraction')
    shared.add_argument('--val-frac', dest='val_frac', type=float, help='Validation fraction')
    shared.add_argument('--split-mode', dest='split_mode', choices=SPLIT_MODES,
                        help='chronological (default) or random')
    shared.add_argument('--noise', type=float, help='Observation noise variance')
    shared.add_argument('--seed', type=int, help='Random seed')
    shared.add_argument('--out', help='Output directory')

    bo = argparse.ArgumentParser(add_help=False)
    bo.add_argument('--iterations', type=int, help='Optimization iterations after the seed designs')
    bo.add_argument('--xi', type=float, help='Expected improvement exploration margin')
    bo.add_argument('--candidates', type=int, help='Random candidates scored per iteration')
    bo.add_argument('--simplex', type=_flag, help='Constrain weights to the simplex (true|false)')
    bo.add_argument('--score', choices=SCORE_FUNCTIONS, help='Objective: validation rmse or lml')

    parser = argparse.ArgumentParser(prog='ensemble-gp',
                                     description='Ensemble-kernel Gaussian process sales forecasting')
    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('ingest', parents=[shared], help='Transactions -> per-category series files')
    commands.add_parser('evaluate', parents=[shared, bo], help='Compare base kernels and the ensemble')
    commands.add_parser('optimize', parents=[shared, bo], help='Tune ensemble weights')
    forecast = commands.add_parser('forecast', parents=[shared, bo], help='Forecast future periods')
    forecast.add_argument('--horizon', type=int, help='Number of future periods')
    return parser


def main(argv=None) -> int:
    setup_global_signal_handlers()

    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}

    try:
        config = RunConfig(args.config, overrides)
        run_command(args.command, config, horizon=overrides.get("horizon"))
    except EnsembleGPError as e:
        print(f"❌ {describe_error(e)}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("\n🛑 Interrupted.")
        return 130
    except Exception as e:
        logging.exception("Unexpected failure")
        print(f"❌ {describe_error(e)}", file=sys.stderr)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
