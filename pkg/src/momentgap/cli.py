"""Command-line entry point for momentgap"""

import argparse
import json
import logging
import sys
from dataclasses import fields
from typing import List, Optional

from . import __version__
from .errors import ParameterError
from .models import FORMATS, SET_KINDS, SUBCOMMANDS, RunConfig
from .runner import EXIT_INPUT, CommandResult, CommandRunner, render

logger = logging.getLogger(__name__)

# Flags whose value is None when not given on the command line
_OVERRIDABLE = (
    "p", "q", "tol", "seed", "samples", "m", "set", "elements", "format", "output", "bias",
    "coeffs", "normalize", "spec_path", "table_path", "rv_path", "inject_c", "n_power",
)


def load_config(config_path: Optional[str] = None) -> RunConfig:
    """Load configuration from a JSON file.

    Unknown keys are ignored with a warning; a missing or malformed file
    keeps the defaults.

    Args:
        config_path: Path to config file (optional)

    Returns:
        RunConfig instance
    """
    config = RunConfig()

    if config_path:
        try:
            with open(config_path, "r") as f:
                data = json.load(f)
            known = {f.name for f in fields(RunConfig)}
            for key, value in data.items():
                if key in known:
                    setattr(config, key, value)
                else:
                    logger.warning(f"Ignoring unknown config key: {key}")
        except FileNotFoundError:
            logger.warning(f"Config file not found: {config_path}")
        except json.JSONDecodeError as e:
            logger.warning(f"Invalid config file: {e}")
        except AttributeError:
            logger.warning(f"Config file must contain a JSON object: {config_path}")

    return config


def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per report; every flag defaults to None so the config file can fill it."""
    parser = argparse.ArgumentParser(
        prog="momentgap",
        description="Sharp constants for the refined Cauchy-Schwarz moment inequality and its applications",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=float, default=None, help="Lower exponent (default: 4)")
    common.add_argument("--q", type=float, default=None, help="Upper exponent (default: 6)")
    common.add_argument("--tol", type=float, default=None, help="Tolerance (default: per subcommand)")
    common.add_argument("--seed", type=int, default=None, help="Seed for randomized sweeps (default: 42)")
    common.add_argument("--format", choices=FORMATS, default=None, help="Output format (default: json)")
    common.add_argument("--output", "-o", type=str, default=None, help="Write the report to this path")
    common.add_argument("--config", type=str, default=None, help="Path to configuration file")
    common.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging")

    sub = parser.add_subparsers(dest="subcommand", metavar="{" + ",".join(SUBCOMMANDS) + "}")
    sub.required = True

    sub.add_parser("constant", parents=[common], help="Compute C(p, q)")
    sub.add_parser("reproduce", parents=[common], help="Check the headline numbers against their windows")

    verify = sub.add_parser("verify", parents=[common], help="Run the randomized invariant suites")
    verify.add_argument("--samples", type=int, default=None, help="Base sample count (default: 10000)")
    verify.add_argument("--rv", dest="rv_path", type=str, default=None,
                        help="JSON file with [{value, prob}, ...] to check as well")
    verify.add_argument("--inject-c", dest="inject_c", type=float, default=None,
                        help="Test this constant for (4, 6) instead of 1/3")

    rademacher = sub.add_parser("rademacher", parents=[common], help="Biased Rademacher sum report")
    rademacher.add_argument("--bias", type=float, default=None, help="Bias p in (0, 1) (default: 0.75)")
    rademacher.add_argument("--coeffs", type=_float_list, default=None, help="Comma-separated coefficients")
    rademacher.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=None,
                            help="Rescale coefficients to unit norm (default: on)")
    rademacher.add_argument("--spec", dest="spec_path", type=str, default=None,
                            help="JSON file with {bias, coeffs, normalize}")

    poincare = sub.add_parser("poincare", parents=[common], help="L1 Poincare check for one cube function")
    poincare.add_argument("--table", dest="table_path", type=str, default=None,
                          help="JSON file with {n, values}")

    expsum = sub.add_parser("expsum", parents=[common], help="Exponential sum moments and bound")
    expsum.add_argument("--set", choices=SET_KINDS, default=None, help="Set kind (default: squares)")
    expsum.add_argument("--m", type=int, default=None, help="Number of squares / random set size (default: 10)")
    expsum.add_argument("--elements", type=_int_list, default=None, help="Comma-separated integers for --set list")
    expsum.add_argument("--n-power", dest="n_power", type=float, default=None,
                        help="Exponent N of the corollary trend column (default: 2)")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then command-line flags."""
    config = load_config(args.config)
    config.subcommand = args.subcommand
    for name in _OVERRIDABLE:
        value = getattr(args, name, None)
        if value is not None:
            setattr(config, name, value)
    return config


def emit(result: CommandResult, fmt: str, output: Optional[str]) -> None:
    text = render(result, fmt)
    if output:
        with open(output, "w") as f:
            f.write(text)
        logger.info(f"Report written to {output}")
    else:
        sys.stdout.write(text)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    # Setup logging; stderr keeps the report on stdout byte-stable
    log_level = logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(
        level=log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )

    config = config_from_args(args)
    result = CommandRunner(config).route()

    fmt = config.format if config.format in FORMATS else "json"
    try:
        emit(result, fmt, config.output)
    except (OSError, ParameterError) as e:
        logger.error(f"Cannot write report: {e}")
        return EXIT_INPUT
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
