"""
Command-line interface for the crossing-probability lab.

Usage:
    python -m crossings formula --eta 0.5 --rect-r 1 2 --strip-ratio 6
    python -m crossings geometry --r 1 2
    python -m crossings mc --kind triangular_site --nx 129 --ny 150 -n 20000 --seed 7
    python -m crossings enumerate --graph sample_config/single_bond.json --p 0.37
    python -m crossings sle --a 1 --b 3 -n 5000 --workers 4
    python -m crossings compare --config sample_config/compare_desk.yaml
"""

import argparse
import logging
import sys
from typing import Any, Optional

from pydantic import ValidationError

from config.settings import Settings
from crossings.config import load_config_from_file, parse_experiment
from crossings.errors import ConfigError, CrossingsError
from crossings.harness import (
    COMMANDS,
    ComparisonRow,
    EnumerationRow,
    FormulaRow,
    GeometryRow,
    RunContext,
)
from crossings.lattice_mc import CrossingStats, SmirnovEstimate
from crossings.output import columns, write_rows
from crossings.seeding import SEED_MAX
from crossings.sle_engine import SleEstimate
from helpers.logging.logger import setup_logger

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


def _column_help() -> str:
    models = [
        FormulaRow,
        GeometryRow,
        CrossingStats,
        SmirnovEstimate,
        EnumerationRow,
        SleEstimate,
        ComparisonRow,
    ]
    lines = [f"  {model.__name__}: {', '.join(columns(model))}" for model in models]
    return "CSV columns, in order:\n" + "\n".join(lines)


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=str, help="Experiment document (JSON or YAML)")
    parser.add_argument("--seed", type=int, help="Master seed, unsigned 64-bit")
    parser.add_argument(
        "--workers",
        type=int,
        help="Worker threads (default: CROSSINGS_RUNTIME__WORKERS or 1)",
    )
    parser.add_argument("--out", type=str, help="Output file (default: stdout)")
    parser.add_argument("--format", choices=["csv", "json"], help="Output format (default: csv)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossings",
        description="Crossing probabilities of critical percolation: formulas, "
        "Monte Carlo, exact enumeration and Loewner races",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=_column_help()
        + "\n\nExit codes: 0 all checks pass, 1 numeric check or sub-run failure, "
        "2 config error",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    formula = sub.add_parser("formula", help="Evaluate closed-form predictions")
    formula.add_argument("--eta", type=float, nargs="+", default=[], help="Cross-ratios")
    formula.add_argument("--rect-r", type=float, nargs="+", default=[], help="Rectangle ratios W/L")
    formula.add_argument("--x", type=float, nargs="+", default=[], help="Triangle coordinates")
    formula.add_argument("--strip-ratio", type=float, nargs="+", default=[], help="Strip W/L")
    _add_common(formula)

    geometry = sub.add_parser("geometry", help="Aspect ratio, modulus and cross-ratio")
    geometry.add_argument("--r", type=float, nargs="+", default=[], help="Aspect ratios")
    geometry.add_argument("--k", type=float, nargs="+", default=[], help="Elliptic moduli")
    geometry.add_argument("--x", type=float, nargs="+", default=[], help="Triangle coordinates")
    _add_common(geometry)

    mc = sub.add_parser("mc", help="Lattice Monte Carlo")
    mc.add_argument("--kind", choices=["square_bond", "triangular_site"], default="triangular_site")
    mc.add_argument(
        "--shape",
        choices=["rectangle", "equilateral_triangle", "periodic_strip"],
        default="rectangle",
    )
    mc.add_argument("--nx", type=int, help="Sites across (strip: periodic width)")
    mc.add_argument("--ny", type=int, default=1, help="Sites along (strip: rows)")
    mc.add_argument("--p", type=float, default=0.5, help="Occupation probability (default: 0.5)")
    mc.add_argument("--crossing", choices=["horizontal", "vertical"], default="horizontal")
    mc.add_argument("-n", "--trials", type=int, help="Number of trials")
    mc.add_argument("--smirnov-x", type=float, nargs="+", default=[], help="Points on BC")
    _add_common(mc)

    enumerate_ = sub.add_parser("enumerate", help="Exhaustive random-cluster enumeration")
    enumerate_.add_argument("--graph", type=str, help="Graph JSON file")
    enumerate_.add_argument("--p", type=float, nargs="+", default=[0.5], help="Bond probabilities")
    _add_common(enumerate_)

    sle = sub.add_parser("sle", help="Loewner-evolution hitting race")
    sle.add_argument("--a", type=float, help="Left point is -a")
    sle.add_argument("--b", type=float, help="Right point is b")
    sle.add_argument("-n", "--traces", type=int, help="Number of traces")
    sle.add_argument("--kappa", type=float, default=6.0, help="Driving diffusion (default: 6)")
    sle.add_argument("--dt0", type=float, help="Base time step")
    sle.add_argument("--eps", type=float, help="Swallow threshold")
    sle.add_argument("--t-max", type=float, help="Time horizon")
    _add_common(sle)

    compare = sub.add_parser("compare", help="Predictions against measurements")
    _add_common(compare)

    return parser


def document_from_args(args: argparse.Namespace) -> dict[str, Any]:
    """Experiment document assembled from command-line flags."""
    if args.command == "formula":
        return {
            "kind": "formula",
            "eta": args.eta,
            "rect_r": args.rect_r,
            "x": args.x,
            "strip_ratio": args.strip_ratio,
        }
    if args.command == "geometry":
        return {"kind": "geometry", "r": args.r, "k": args.k, "x": args.x}
    if args.command == "mc":
        return {
            "kind": "mc",
            "lattice": {
                "kind": args.kind,
                "shape": args.shape,
                "nx": args.nx,
                "ny": args.ny,
                "p": args.p,
                "crossing": args.crossing,
            },
            "n_trials": args.trials,
            "smirnov_x": args.smirnov_x,
        }
    if args.command == "enumerate":
        return {"kind": "enumerate", "source": {"graph_path": args.graph}, "p": args.p}
    if args.command == "sle":
        params = {"kappa": args.kappa, "dt0": args.dt0, "eps_swallow": args.eps, "t_max": args.t_max}
        return {
            "kind": "sle",
            "a": args.a,
            "b": args.b,
            "n_traces": args.traces,
            "params": {k: v for k, v in params.items() if v is not None},
        }
    raise ConfigError(f"{args.command} needs --config")


def _first(*values: Optional[Any]) -> Any:
    return next(v for v in values if v is not None)


def run(args: argparse.Namespace, settings: Settings) -> int:
    """Validate, execute and write one experiment; returns the exit code."""
    if args.config:
        document = load_config_from_file(args.config)
        if document.get("kind") != args.command:
            raise ConfigError(
                f"{args.config} describes a {document.get('kind')!r} experiment, "
                f"not {args.command!r}"
            )
    else:
        document = document_from_args(args)
    config = parse_experiment(document)

    context = RunContext(
        master_seed=_first(args.seed, config.master_seed, 0),
        workers=_first(args.workers, config.workers, settings.runtime.workers),
        chunk_size=settings.runtime.chunk_size,
    )
    if context.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {context.workers}")
    if not 0 <= context.master_seed <= SEED_MAX:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {context.master_seed}")
    out = _first(args.out, config.output.path, "") or None
    fmt = _first(args.format, config.output.format)

    logging.info(
        f"Running {args.command} (seed={context.master_seed}, workers={context.workers})",
        extra={
            "command": args.command,
            "master_seed": context.master_seed,
            "workers": context.workers,
        },
    )
    result = COMMANDS[args.command](config, context)
    write_rows(result.rows, result.model, fmt, out)
    return EXIT_OK if result.ok else EXIT_CHECK_FAILED


def main():
    """Main CLI function."""

    # load settings from the environment and .env
    settings = Settings()  # pyright: ignore[reportCallIssue]
    setup_logger(settings.log)

    parser = build_parser()
    args = parser.parse_args()

    try:
        code = run(args, settings)
    except (ConfigError, ValidationError) as e:
        logging.error(f"Configuration error: {e}")
        sys.exit(EXIT_CONFIG_ERROR)
    except KeyboardInterrupt:
        logging.info("Run interrupted by user")
        sys.exit(EXIT_CHECK_FAILED)
    except CrossingsError as e:
        logging.error(f"Run failed: {e}")
        sys.exit(EXIT_CHECK_FAILED)

    if code != EXIT_OK:
        logging.error("Some checks failed")
    sys.exit(code)


if __name__ == "__main__":
    main()
