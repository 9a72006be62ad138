"""
Command-line entry point (``hybrid-sim``).

    hybrid-sim run <config> [-o out.csv] [--cpg-trace cpg.csv] [--set key=value ...]
    hybrid-sim sweep <config> --grid "key=v1,v2;key2=..." [-o dir] [--jobs N]
    hybrid-sim validate [config] [--set ...] [--coefficients [air=|water=]table.csv]
    hybrid-sim presets [--magnitude X]

Exit codes are listed in ``EXIT_CODES``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from logging.handlers import RotatingFileHandler

from hybrid_vehicle_sim import __version__
from hybrid_vehicle_sim.controller.scenario_controller import ScenarioController
from hybrid_vehicle_sim.errors import ConfigError, NumericalDivergence, SimulationError

EXIT_OK         = 0
EXIT_VALIDATION = 1
EXIT_CONFIG     = 2
EXIT_DIVERGENCE = 3
EXIT_IO         = 4

EXIT_CODES: dict[int, str] = {
    EXIT_OK:         "success",
    EXIT_VALIDATION: "validation failure (a property check failed)",
    EXIT_CONFIG:     "configuration error (parse, schema or override)",
    EXIT_DIVERGENCE: "numerical divergence",
    EXIT_IO:         "I/O error (missing or unwritable file)",
}


def setup_logging(log_file: str | None = "sim_log.txt", verbose: bool = False):
    """
    Configure the root logger. Console output goes to stderr so CSV or
    tables printed on stdout stay clean; the optional log file rotates
    at 1 MB × 5 backups.
    """
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(RotatingFileHandler(
            log_file, maxBytes=1_048_576, backupCount=5, encoding="utf-8",
        ))
    logging.basicConfig(
        level   = logging.DEBUG if verbose else logging.INFO,
        format  = "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force   = True,
    )


logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    codes = "\n".join(f"  {code}  {text}" for code, text in EXIT_CODES.items())
    parser = argparse.ArgumentParser(
        prog            = "hybrid-sim",
        description     = "Hybrid aerial-aquatic vehicle simulator.",
        epilog          = f"exit codes:\n{codes}",
        formatter_class = argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-file", default="sim_log.txt",
                        help="rotating log file ('' disables file logging)")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and write its trajectory CSV")
    run.add_argument("config")
    run.add_argument("-o", "--output", default=None)
    run.add_argument("--cpg-trace", default=None, metavar="CSV",
                     help="also write the oscillator trace (t, theta, r, x, phi)")
    run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    sweep = sub.add_parser("sweep", help="run a parameter grid")
    sweep.add_argument("config")
    sweep.add_argument("--grid", required=True, help='e.g. "cpg.phase13=0,3.14159;cpg.f=2,2.4"')
    sweep.add_argument("-o", "--output", default="sweep")
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    validate = sub.add_parser("validate", help="run the built-in invariant suite")
    validate.add_argument("config", nargs="?", default=None)
    validate.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    validate.add_argument("--coefficients", action="append", default=[],
                          metavar="[MEDIUM=]CSV", help="replace a coefficient table")

    presets = sub.add_parser("presets", help="print the behaviour presets")
    presets.add_argument("--magnitude", type=float, default=None)
    return parser


def _cmd_run(controller: ScenarioController, args) -> int:
    record, path = controller.run(args.config, args.overrides, args.output, args.cpg_trace)
    print(f"{path} ({len(record)} samples)")
    return EXIT_OK


def _cmd_sweep(controller: ScenarioController, args) -> int:
    summary = controller.sweep(args.config, args.grid, args.output, args.jobs, args.overrides)
    print(summary)
    return EXIT_OK


def _cmd_validate(controller: ScenarioController, args) -> int:
    results = controller.validate(args.config, args.overrides, args.coefficients)
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'}  {r.name:<34} {r.message}")
    failed = [r.name for r in results if not r.ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VALIDATION if failed else EXIT_OK


def _cmd_presets(controller: ScenarioController, args) -> int:
    rows = controller.presets(args.magnitude)
    print(f"{'preset':<10} {'X1, X2, X3 (rad)':<28} relation")
    for row in rows:
        print(f"{row['preset']:<10} {row['X']:<28} {row['relation']}")
    return EXIT_OK


COMMANDS = {
    "run":      _cmd_run,
    "sweep":    _cmd_sweep,
    "validate": _cmd_validate,
    "presets":  _cmd_presets,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_file or None, args.verbose)
    logger.debug("hybrid-sim %s: %s", __version__, args)

    controller = ScenarioController()
    try:
        return COMMANDS[args.command](controller, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalDivergence as e:
        print(f"diverged: {e}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except SimulationError as e:
        logger.exception("Simulation failed")
        print(f"simulation error: {e}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
