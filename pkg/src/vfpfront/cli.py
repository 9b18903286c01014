"""Command-line entry point: ``vfpfront <subcommand> [flags]``.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, KEYS, parse_config
from .errors import NumericalError, ValidationError
from .pipeline import run_pipeline

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3

HELP = {
    "thermo": "coexisting densities of the homogeneous phases",
    "front": "solve and save the front profile",
    "spectrum": "spectrum of the second variation at the front",
    "evolve": "kinetic evolution of a symmetric perturbation",
    "hydro": "hydrodynamic gradient-flow relaxation around the front",
    "pipeline": "thermo, front, spectrum and evolve in sequence",
}


def _shared_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", metavar="PATH", help="flat key = value config file")
    parent.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    for key, (_, default, text) in KEYS.items():
        # every config key has a flag; parsing and validation happen in parse_config
        parent.add_argument("--" + key.replace("_", "-"), dest=key, metavar="VALUE", default=None,
                            help=f"{text} (default: {default})")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vfpfront", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parent = _shared_flags()
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[parent], help=HELP[name], description=HELP[name])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, which matches our convention
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {key: getattr(args, key) for key in KEYS}
    try:
        cfg = parse_config(args.config, overrides, experiment=args.command)
    except ValidationError as exc:
        print(f"vfpfront: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        manifest = run_pipeline(cfg)
    except ValidationError as exc:
        print(f"vfpfront: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"vfpfront: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if manifest.notice:
        print(f"vfpfront: {manifest.notice}", file=sys.stderr)
    if manifest.failure:
        f = manifest.failure
        print(f"vfpfront: stage {f['stage']} failed ({f['error']}): {f['message']}", file=sys.stderr)
        return EXIT_VALIDATION if f["kind"] == "validation" else EXIT_NUMERICAL
    print(f"wrote {manifest.path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
