"""Command-line entry point: ``levycredit <command> [options]``.

Exit codes: 0 success, 1 a validation check failed, 2 bad configuration,
3 an output file could not be written.

``--model`` takes a preset name, inline JSON or a path to a JSON file of the
form ``{"family": ..., "params": {...}}``:

* ``dcp``: ``c``, ``rho``, ``beta``. Downward jumps at rate rho with Exp(beta) sizes.
* ``dgamma``: ``c``, ``mu``, ``nu``. Downward gamma subordinator with mean rate mu
  and variance rate nu.
* ``vg``: ``c``, ``nu``, ``sigma``, ``theta``. Variance gamma, split into an upward
  and a downward gamma subordinator.

A ``--config`` file is a JSON object whose keys are the long flag names with
underscores (``model``, ``seed``, ``horizon``, ``steps_per_year``,
``event_driven``, ``gap``, ``samples``, ``h_schedule``, ``horizons``, ``out``,
``workers``, ``block_size``, ``confidence``, ``fail_on_inconclusive``,
``pi_method``, ``with_barrier``). Unknown keys are rejected.
"""
from __future__ import annotations

import argparse
import json
import sys

from .cli_io import (
    PRESETS,
    ExperimentConfig,
    cmd_figures,
    cmd_intensity,
    cmd_simulate,
    cmd_spread,
    cmd_validate,
)
from .errors import ConfigError, LevyCreditError, ParameterError

EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3

# per-command defaults, applied only when neither the flag nor the config file sets a value
COMMAND_DEFAULTS = {
    "simulate": {"model": "vg-reference", "horizon": 5.0},
    "intensity": {"model": "vg-reference"},
    "spread": {"model": "vg-reference", "horizon": 4.5},
    "validate": {"model": "dcp-unit"},
    "figures": {"model": "vg-reference", "horizon": 5.0},
}


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="levycredit",
        description="Default intensity and credit spreads for Lévy models, with Monte Carlo checks.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--model", help=f"preset ({', '.join(PRESETS)}), inline JSON or JSON file")
    common.add_argument("--seed", type=int)
    common.add_argument("--horizon", type=float, help="path length / longest horizon (years)")
    common.add_argument("--steps-per-year", type=float, dest="steps_per_year")
    common.add_argument("--event-driven", type=_bool, dest="event_driven", metavar="BOOL")
    common.add_argument("--gap", help="comma-separated gaps X - min X")
    common.add_argument("--samples", type=int)
    common.add_argument("--h-schedule", dest="h_schedule", help="comma-separated, decreasing")
    common.add_argument("--horizons", help="comma-separated spread horizons")
    common.add_argument("--workers", type=int)
    common.add_argument("--pi-method", dest="pi_method", choices=("auto", "quadrature", "closed"))
    common.add_argument("--out", help="output directory (default: out)")
    # mutation hook for testing the validation suite itself
    common.add_argument("--pi-scale", type=float, dest="pi_scale", help=argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="one path and its intensity series")
    p.add_argument("--with-barrier", action="store_true", dest="with_barrier", default=None,
                   help="sample a barrier and zero the intensity after default")
    sub.add_parser("intensity", parents=[common], help="Pi and intensity at given gaps")
    sub.add_parser("spread", parents=[common], help="credit-spread term structure")
    p = sub.add_parser("validate", parents=[common], help="run the Monte Carlo checks")
    p.add_argument("--fail-on-inconclusive", action="store_true", dest="fail_on_inconclusive",
                   default=None)
    sub.add_parser("figures", parents=[common], help="data for the path and spread figures")
    return parser


def _config(args):
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    return ExperimentConfig.from_sources(args.config, defaults=COMMAND_DEFAULTS[args.command],
                                         **overrides)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
    except (ConfigError, ParameterError) as exc:
        name = getattr(exc, "field", None)
        print(f"levycredit: invalid configuration ({name}): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "simulate":
            files = cmd_simulate(cfg)
        elif args.command == "intensity":
            files = cmd_intensity(cfg)
        elif args.command == "spread":
            files = cmd_spread(cfg)
        elif args.command == "figures":
            files, summary = cmd_figures(cfg)
            print(json.dumps(summary, sort_keys=True))
        else:
            files, doc, failing = cmd_validate(cfg)
            for c in doc["checks"]:
                print(f"{c['status']:>12}  {c['name']}")
            print(f"verdict: {doc['verdict']}")
            if failing:
                print(f"levycredit: failing checks: {', '.join(failing)}", file=sys.stderr)
                for f in files:
                    print(f)
                return EXIT_CHECK_FAILED
    except OSError as exc:
        print(f"levycredit: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ParameterError) as exc:
        print(f"levycredit: invalid configuration ({getattr(exc, 'field', None)}): {exc}",
              file=sys.stderr)
        return EXIT_CONFIG
    except LevyCreditError as exc:
        print(f"levycredit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
