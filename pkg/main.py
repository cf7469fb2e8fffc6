#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Copyright (C) 2025-2026 Bence Göblyös

This program is free software: you can redistribute it and/or modify it under
the terms of the GNU General Public License as published by the Free Software
Foundation, version 3.

This program is distributed in the hope that it will be useful, but WITHOUT ANY
WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS FOR A
PARTICULAR PURPOSE. See the GNU General Public License for more details.

You should have received a copy of the GNU General Public License along with
this program. If not, see https://www.gnu.org/licenses/.
"""

#%% Imports
import argparse
import logging
import os
import sys

import numpy as np

from Experiments.ApproxError import ApproxErrorExperiment
from Experiments.SER import SerExperiment
from Utilities.Config import SCHEMES, describeConfig, loadConfig
from Utilities.Errors import ConfigError, OtfsNomaError

logger = logging.getLogger('OTFS-NOMA')

#%% Exit codes
EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

ROOT = os.path.dirname(os.path.abspath(__file__))


#%% Subcommands
def cmdRun(cfg, args):
    records = SerExperiment(cfg).iterateSweep(out = args.out, progress = not args.quiet)
    if args.out is None:
        print(SerExperiment.recordsToFrame(records).to_string(index = False))
    return EXIT_OK


def cmdApproxError(cfg, args):
    df = ApproxErrorExperiment(cfg).iterateVelocities(out = args.out, progress = not args.quiet)
    if args.out is None:
        print(df.to_string(index = False))
    return EXIT_OK


def cmdShowConfig(cfg, args):
    for key, value, pretty in describeConfig(cfg):
        print(f"{key:28s} {value!s:40s} {pretty}")
    return EXIT_OK


def cmdValidate(args):
    # Imported here so that the simulator itself does not need pytest
    import pytest

    opts = [os.path.join(ROOT, "tests"), "-q"]
    if args.quiet:
        opts.append("-m")
        opts.append("not slow")
    status = pytest.main(opts)
    return EXIT_OK if status == 0 else EXIT_RUNTIME


#%% Argument parsing
def buildParser():
    parser = argparse.ArgumentParser(description = "Two-user downlink OTFS-NOMA link-level simulator.")
    parser.add_argument("--log-level", default = "INFO", choices = ["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--quiet", action = "store_true", help = "Disable progress bars.")

    sub = parser.add_subparsers(dest = "command", required = True)
    for name, helptext in (("run", "Symbol error rate sweep."),
                           ("approx-error", "Exact vs. approximate MSE error over velocities."),
                           ("show-config", "Print the resolved configuration.")):
        p = sub.add_parser(name, help = helptext)
        p.add_argument("--config", default = None, help = "YAML configuration file.")
        p.add_argument("--seed", type = int, default = None)
        p.add_argument("--threads", type = int, default = None)
        p.add_argument("--trials", type = int, default = None)
        p.add_argument("--scheme", action = "append", choices = SCHEMES, default = None,
                       help = "Detection scheme, repeat for several. Default: all.")
        p.add_argument("--out", default = None, help = "CSV output path.")

    sub.add_parser("validate", help = "Run the test suite.")
    return parser


def main(argv = None):
    args = buildParser().parse_args(argv)
    logging.basicConfig(level = getattr(logging, args.log_level),
                        format = "%(asctime)s %(name)s %(levelname)s: %(message)s")

    if args.command == "validate":
        return cmdValidate(args)

    try:
        overrides = {
            "seed": args.seed,
            "threads": args.threads,
            "trials": args.trials,
            "schemes": tuple(args.scheme) if args.scheme else None
        }
        cfg = loadConfig(args.config, overrides)
        handler = {"run": cmdRun, "approx-error": cmdApproxError, "show-config": cmdShowConfig}[args.command]
        return handler(cfg, args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except (OtfsNomaError, np.linalg.LinAlgError, FloatingPointError) as e:
        logger.error(f"Run failed: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
