#!/usr/bin/env python3
"""Run every experiment with its default configuration.

Usage: python3 scripts/reproduce_all.py [OUT_DIR] [--plot]
"""

import json
import sys
from pathlib import Path

from darek.harness import EXPERIMENTS, ExperimentConfig, run


def main(argv):
    plot = "--plot" in argv
    args = [a for a in argv if a != "--plot"]
    root = Path(args[0] if args else "results")
    for name in EXPERIMENTS:
        summary = run(ExperimentConfig.for_experiment(name, out=str(root / name), plot=plot))
        summary.pop("config", None)
        print(name, json.dumps(summary, sort_keys=True))


if __name__ == "__main__":
    main(sys.argv[1:])
