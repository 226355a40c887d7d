#!/usr/bin/env python3
"""Enclosure rate of the cos and scan experiments across seeds.

Usage: python3 scripts/seed_sweep.py [N_SEEDS] [OUT_CSV]
"""

import csv
import sys
import tempfile

from darek.harness import ExperimentConfig, run


def main(argv):
    n = int(argv[0]) if argv else 5
    out = argv[1] if len(argv) > 1 else "seed_sweep.csv"
    with tempfile.TemporaryDirectory() as tmp, open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["experiment", "seed", "enclosure_rate", "train_rmse"])
        for name in ("cos1", "cos2", "scan"):
            for seed in range(n):
                s = run(ExperimentConfig.for_experiment(name, seed=seed, out=tmp))
                w.writerow([name, seed, repr(s["enclosure_rate"]), repr(s["train_rmse"])])
                print(f"{name:5s} seed {seed}: enclosure {s['enclosure_rate']:.4f}  rmse {s['train_rmse']:.4f}")


if __name__ == "__main__":
    main(sys.argv[1:])
