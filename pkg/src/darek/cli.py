"""``darek`` command line: one subcommand per experiment.

Exit status is 0 on success, 2 for invalid input or configuration and 3
when a numerical step fails (training divergence, singular kernel).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import DarekNumericalError
from .harness import EXPERIMENTS, ExperimentConfig, run

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3

# argparse dest -> ExperimentConfig field
_FLAG_FIELDS = {
    "seed": "seed", "order": "order", "l1": "l1", "lk1": "lk1", "epochs": "epochs",
    "lr": "lr", "knots": "n_knots", "out": "out", "plot": "plot", "knot_errors": "knot_errors",
    "radius": "radius", "dist": "dist", "rays": "rays", "synth": "shape", "scan": "scan_file",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--order", type=int, help="spline order k")
    common.add_argument("--l1", type=float, help="first-order Lipschitz constant of the target")
    common.add_argument("--lk1", type=float, help="order-(k+1) Lipschitz constant of the target")
    common.add_argument("--epochs", type=int)
    common.add_argument("--lr", type=float, help="learning rate")
    common.add_argument("--knots", type=int, help="number of knots")
    common.add_argument("--out", metavar="DIR", help="output directory (default: results)")
    common.add_argument("--config", metavar="FILE", help="JSON file with ExperimentConfig keys")
    common.add_argument("--knot-errors", dest="knot_errors", choices=("piece", "table"))
    common.add_argument("--plot", action="store_true", default=None, help="also write SVG plots")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="darek", description="Distance-aware error bounds for spline KANs.")
    sub = p.add_subparsers(dest="experiment", required=True)
    helps = {
        "cos1": "one-layer cos fit with error band",
        "cos2": "two-layer cos fit with error band",
        "compare": "DAREK vs ensemble vs GP on cos",
        "scan": "SDF from a laser scan and obstacle boundary bounds",
        "bench": "bound-query latency benchmark",
    }
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "scan":
            src = sp.add_mutually_exclusive_group()
            src.add_argument("--scan", metavar="FILE", help="scan CSV with header theta,range")
            src.add_argument("--synth", choices=("circle", "box"), help="synthetic obstacle (default circle)")
            sp.add_argument("--radius", type=float, help="obstacle radius or half side [m]")
            sp.add_argument("--dist", type=float, help="obstacle centre distance [m]")
            sp.add_argument("--rays", type=int, help="number of synthetic rays")
    return p


def config_from_args(args) -> ExperimentConfig:
    overrides = {}
    for dest, name in _FLAG_FIELDS.items():
        v = getattr(args, dest, None)
        if v is not None:
            overrides[name] = v
    if args.config:
        return ExperimentConfig.from_json_file(args.config, args.experiment, **overrides)
    return ExperimentConfig.for_experiment(args.experiment, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        summary = run(cfg)
    except (ValueError, OSError, TypeError) as exc:  # JSONDecodeError and DarekValidationError included
        print(f"darek: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DarekNumericalError as exc:
        print(f"darek: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    summary.pop("config", None)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
