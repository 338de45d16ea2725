"""Command-line front end: one subcommand per experiment plus ``render``.

Exit status is 0 on success, 2 when some sweep points failed (the others are
still written) and 1 on fatal errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ScenarioConfig, load_config
from .errors import WiblockError
from .experiments import NAMES, SWEEPABLE, ExperimentSpec, render_tables, run_experiment

log = logging.getLogger("wiblock")

DEFAULT_WITNESSES = 2


def _engines(text):
    items = tuple(x.strip() for x in text.split(",") if x.strip())
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list such as analytic,des")
    return frozenset(items)


def _axis(text):
    try:
        name, values = text.split("=", 1)
        return name.strip(), [v for v in values.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected NAME=v1,v2,...") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="wiblock", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in NAMES:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", type=Path, help="scenario file (key=value or JSON)")
        p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
        p.add_argument("--seed", type=int, default=None, help="defaults to the config rng_seed")
        p.add_argument("--engines", type=_engines, default=frozenset({"analytic"}),
                       help="comma-separated subset of analytic,des")
        p.add_argument("--reps", type=int, default=1, help="independent DES replications")
        p.add_argument("--horizon", type=float, default=None, help="DES horizon in seconds")
        p.add_argument("--links", choices=("lossless", "shadowed"), default="lossless")
        p.add_argument("--axis", type=_axis, default=None,
                       help=f"NAME=v1,v2,... with NAME in {', '.join(sorted(SWEEPABLE))}")
        p.add_argument("--no-render", action="store_true", help="skip summary.txt/index.json")
    p = sub.add_parser("render", help="print aligned tables for an output directory")
    p.add_argument("out", type=Path)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "render":
            print(render_tables(args.out), end="")
            return 0
        cfg = load_config(args.config) if args.config else ScenarioConfig(
            num_witnesses=DEFAULT_WITNESSES)
        spec = ExperimentSpec(name=args.command, base=cfg, output_dir=args.out,
                              sweep_axis=args.axis, engines=args.engines,
                              seed=cfg.rng_seed if args.seed is None else args.seed,
                              reps=args.reps, horizon_s=args.horizon, links=args.links)
        out = run_experiment(spec)
        if not args.no_render:
            render_tables(args.out)
    except (WiblockError, ValueError, OSError) as exc:
        print(f"wiblock: error: {exc}", file=sys.stderr)
        return 1
    for f in out.failures:
        print(f"wiblock: point {f['point']} failed: {f['error']}: {f['message']}", file=sys.stderr)
    for path in out.files:
        log.info("wrote %s", path)
    return out.exit_code


if __name__ == "__main__":
    sys.exit(main())
