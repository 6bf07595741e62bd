"""
EnQSP Command Line

Runs and validates experiment configs.

    python main.py run samples/configs/ensemble_convergence.json --out-dir out --threads 4
    python main.py validate samples/configs/hsim.json
    python main.py list-kinds

Exit status: 0 when every check passes, 1 when a check or the run fails,
2 when the config is invalid.
"""

import argparse
import asyncio
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from runner.config import ConfigSerializer, ConfigValidationError, validate_config
from runner.engine import ExperimentEngine
from runner.experiments import build_registry

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
THREADS_ENV = "ENQSP_THREADS"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="enqsp", description="Ensemble quantum signal processing experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run an experiment config")
    run.add_argument("config", type=Path, help="experiment config (JSON)")
    run.add_argument("--out-dir", type=Path, default=Path("."), help="directory of the report files")
    run.add_argument("--threads", type=int, default=None, help=f"concurrent trials (default: ${THREADS_ENV} or 1)")
    run.add_argument("--seed-override", type=int, default=None, help="replace the config's master seed")
    run.add_argument("--record-timing", action="store_true", help="add per-trial wall time to the CSV")

    validate = commands.add_parser("validate", help="validate an experiment config")
    validate.add_argument("config", type=Path, help="experiment config (JSON)")

    commands.add_parser("list-kinds", help="list experiment kinds")
    return parser


def resolve_threads(requested: Optional[int]) -> int:
    """
    Thread count from --threads, then ENQSP_THREADS, then 1.

    Raises:
        ValueError: If the value is not a positive integer
    """
    if requested is None:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            requested = int(raw)
        except ValueError as e:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from e
    if requested < 1:
        raise ValueError(f"Thread count must be at least 1, got {requested}")
    return requested


def load_config(path: Path, seed_override: Optional[int] = None):
    """
    Read and validate a config file.

    Raises:
        ConfigValidationError: If the file is unreadable or the config invalid
    """
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigValidationError([f"cannot read {path}: {e}"]) from e
    config = validate_config(raw, build_registry())
    if seed_override is not None:
        if not 0 <= seed_override < 2 ** 64:
            raise ConfigValidationError([f"--seed-override: must lie in [0, 2^64), got {seed_override}"])
        config = config.with_seed(seed_override)
    return config


def run_command(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config, args.seed_override)
        threads = resolve_threads(args.threads)
    except (ConfigValidationError, ValueError) as e:
        print(e, file=sys.stderr)
        return EXIT_INVALID

    engine = ExperimentEngine(build_registry(), threads=threads, record_timing=args.record_timing)
    try:
        result = asyncio.run(engine.run(config))
    except Exception as e:
        logger.error(f"Experiment '{config.kind}' aborted: {e}", exc_info=True)
        return EXIT_FAIL

    paths = engine.write_reports(result, config, args.out_dir)
    status = "PASS" if result.passed else "FAIL"
    print(f"{status} {config.kind}: {result.success_count} trial(s) succeeded, {result.failed_count} failed")
    print(f"rows: {paths['rows']}")
    print(f"summary: {paths['summary']}")
    return EXIT_PASS if result.passed else EXIT_FAIL


def validate_command(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
    except ConfigValidationError as e:
        print(e, file=sys.stderr)
        return EXIT_INVALID
    print(ConfigSerializer.to_json(config))
    return EXIT_PASS


def list_kinds_command(args: argparse.Namespace) -> int:
    registry = build_registry()
    for kind in registry.kinds():
        print(f"{kind:<22} {registry.get(kind).description}")
    return EXIT_PASS


COMMANDS = {
    "run": run_command,
    "validate": validate_command,
    "list-kinds": list_kinds_command,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
