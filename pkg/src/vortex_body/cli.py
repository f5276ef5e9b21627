"""Command line entry point: ``vortex-body run|diagnose|regularize|converge <config>``.

Exit codes: 0 success, 2 configuration error, 3 numerical invariant breach.
Log verbosity comes from ``VORTEX_BODY_LOG`` (DEBUG, INFO, WARNING, ...).
"""

import argparse
import logging
import os
import sys

from . import runner
from .config import load_config
from .errors import DomainError, InvalidArgument, InvariantBreach, SolverFailure

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
LOG_ENV = "VORTEX_BODY_LOG"

log = logging.getLogger("vortex_body")


def _setup_logging():
    level_name = os.environ.get(LOG_ENV, "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def build_parser():
    parser = argparse.ArgumentParser(prog="vortex-body", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "integrate one configuration and write trajectory, particles and run.json"),
        ("diagnose", "report added mass, solver residuals and Blasius integrals"),
        ("regularize", "write the mollified initial vorticity for each level"),
        ("converge", "run every mollification level and compare the velocities"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="TOML configuration file")
        p.add_argument("-o", "--output-dir", help="override output_dir from the configuration")
    return parser


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidArgument as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "run":
            res = runner.run(cfg, args.output_dir)
            print(f"wrote {len(res.rows)} snapshots; {res.penetrations} penetration event(s)")
        elif args.command == "diagnose":
            _, text = runner.diagnose(cfg, args.output_dir)
            print(text, end="")
        elif args.command == "regularize":
            rows = runner.regularize(cfg, args.output_dir)
            for row in rows:
                print(f"n={row['level']:3d}  L1 diff={row['L1_diff']:.4e}  Lp diff={row['Lp_diff']:.4e}  "
                      f"beta_n={row['beta_n']:.10f}")
        else:
            rep = runner.converge(cfg, args.output_dir)
            for row in rep.rows:
                print(f"n={row['level']:3d}  Lp diff={row['Lp_diff']:.4e}  "
                      f"sup accel={row['sup_acceleration']:.4e}")
            for a, b, d in rep.pairs:
                print(f"{a}->{b}: max_t L2_loc velocity difference {d:.4e}")
    except (InvariantBreach, SolverFailure, DomainError) as exc:
        print(f"numerical invariant breach: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InvalidArgument as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
