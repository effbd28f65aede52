"""Command line entry point: ``nlobsv {simulate,envelope,upe-check,plot}``.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import load_config
from .errors import ConfigError, TrajectoryGapError
from .ode_core import IntegrationDiverged
from .systems import PoleProximityError

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO,
              "debug": logging.DEBUG}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlobsv", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "run plant and observer for every configured initial estimate"),
                        ("envelope", "Monte Carlo scatter and lower envelope of the mismatch"),
                        ("upe-check", "windowed-Gram excitation check on a bearing trajectory"),
                        ("plot", "re-render SVG figures from existing CSV output")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="experiment JSON file")
        p.add_argument("--out", default=None, help="output directory (default: config output_dir)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads for sampling")
    return parser


def _setup_logging() -> None:
    level = LOG_LEVELS.get(os.environ.get("NLOBSV_LOG", "info").lower(), logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr, force=True)


def main(argv=None) -> int:
    from . import runner

    args = _parser().parse_args(argv)
    _setup_logging()
    log = logging.getLogger("nlobsv")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config).with_seed(args.seed)
        if args.command == "simulate":
            runner.run_simulate(cfg, args.out)
        elif args.command == "envelope":
            runner.run_envelope(cfg, args.out, threads=args.threads)
        elif args.command == "upe-check":
            report = runner.run_upe(cfg, args.out)
            print(f"upe-check {'PASS' if report.passed else 'FAIL'}: "
                  f"min excitation {report.min_excitation:.6g} (delta {report.delta:.6g})")
        else:
            for path in runner.render_plots(cfg, args.out):
                print(path)
    except (ConfigError, TrajectoryGapError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (IntegrationDiverged, PoleProximityError) as exc:
        log.error("numerical divergence: %s", exc)
        return EXIT_DIVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
