"""
hardy_factor - Command line
===========================

    python main.py complete --input fixtures/example_1_6.json --output report.json
    python main.py complete --input fixtures/identity_completion.json --sweep 2,3,5
    python main.py analyze --input fixtures/non_dc_z1_z2.json --format text
    python main.py selftest --seed 0

Exit codes: 0 pass, 1 a check failed, 2 input does not parse,
3 a stage failed (report still written).
"""

import argparse
import logging
import sys
from typing import List, Optional, Tuple

from core.config import HARDY_FACTOR_VERSION, get_settings
from cli_reports import COMMANDS, RunManifest, run


def _degree_list(text: str) -> Tuple[int, ...]:
    try:
        degrees = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of degrees: {text!r}") from exc
    if not degrees:
        raise argparse.ArgumentTypeError("empty degree list")
    return degrees


def _parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="hardy_factor",
        description="Inner-function extraction and weak completion with numerical certificates.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--input", default=None, help="Problem file (JSON).")
    parser.add_argument("--output", default=None, help="Report path; stdout when omitted.")
    parser.add_argument("--degree", type=int, default=None, help="Replace the window degree d.")
    parser.add_argument("--tolerance", type=float, default=None,
                        help="Replace the verdict tolerances (commutator, projection, inner, residual).")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--torus-grid", type=int, default=None, help="Torus points per axis.")
    parser.add_argument("--sweep", type=_degree_list, default=None,
                        help="complete only: comma-separated window degrees to re-run (e.g. 6,8,10).")
    parser.add_argument("--format", choices=("json", "text"), default="json")
    parser.add_argument("--log-level", default=None, help="Logging level (default HARDY_FACTOR_LOG_LEVEL or INFO).")
    parser.add_argument("--version", action="version", version=f"hardy_factor {HARDY_FACTOR_VERSION}")
    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    args = _parse_args(argv)
    level = (args.log_level or get_settings().log_level).upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format="%(message)s",
                        stream=sys.stderr)
    manifest = RunManifest(
        command=args.command,
        input_path=args.input,
        output_path=args.output,
        output_format=args.format,
        tolerance=args.tolerance,
        seed=args.seed,
        degree=args.degree,
        torus_grid=args.torus_grid,
        sweep=args.sweep,
    )
    return run(manifest)


if __name__ == "__main__":
    raise SystemExit(main())
