"""
Command-line front end.

Usage:
    python -m app.cli <steady|limit|evolve|sweep|verify> --config PATH [--out-dir PATH]

Exit codes: 0 success, 1 invalid input or config, 2 solver failure,
3 verify-suite failure. Errors are written to stderr as a JSON body.
"""

import argparse
import json
import logging
import sys
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from .config import RunConfig, get_settings, load_config
from .errors import InputDomainError, LabError
from .services import storage_service as storage
from .services import workflows

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOLVER = 2
EXIT_VERIFY = 3


def _run_verify(cfg: RunConfig, out_dir) -> int:
    checks = workflows.verify(cfg, out_dir)
    failures = [c.model_dump() for c in checks if not c.passed]
    if failures:
        print(json.dumps({"error": "VerifyFailure", "failures": failures}, indent=2), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _plain(action: Callable) -> Callable[[RunConfig, object], int]:
    def handler(cfg: RunConfig, out_dir) -> int:
        action(cfg, out_dir)
        return EXIT_OK

    return handler


COMMANDS: Dict[str, Callable[[RunConfig, object], int]] = {
    "steady": _plain(workflows.steady),
    "limit": _plain(workflows.limit),
    "evolve": _plain(workflows.evolve),
    "sweep": _plain(workflows.sweep),
    "verify": _run_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemolab",
        description="Steady states, limit profiles and time evolution of a volume-filling chemotaxis-consumption model",
    )
    parser.add_argument("subcommand", choices=sorted(COMMANDS), help="Workflow to run")
    parser.add_argument("--config", required=True, help="Path to a key = value run configuration")
    parser.add_argument("--out-dir", help="Directory for output files (overrides out_dir in the config)")
    return parser


def _fail(exc: Exception, code: int) -> int:
    if isinstance(exc, LabError):
        body = exc.to_dict()
    else:
        body = {"error": type(exc).__name__, "message": str(exc), "details": {}}
    print(json.dumps(body, indent=2, default=str), file=sys.stderr)
    return code


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        cfg = load_config(args.config)
        out_dir = storage.get_output_directory(args.out_dir or cfg.out_dir)
        logger.info(f"Running {args.subcommand} with output in {out_dir}")
        code = COMMANDS[args.subcommand](cfg, out_dir)
    except (InputDomainError, ValidationError) as exc:
        logger.error(f"{args.subcommand} rejected its input: {exc}")
        return _fail(exc, EXIT_INPUT)
    except LabError as exc:
        logger.error(f"{args.subcommand} failed: {exc}")
        return _fail(exc, EXIT_SOLVER)

    logger.info(f"{args.subcommand} finished with exit code {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
