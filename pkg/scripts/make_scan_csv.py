#!/usr/bin/env python3
"""Write a synthetic laser scan in the ``theta,range`` CSV format.

Usage: python3 scripts/make_scan_csv.py OUT.csv [circle|box] [N_RAYS] [NOISE_STD]
"""

import sys

from darek.scan import save_scan, synth_scan


def main(argv):
    if not argv:
        sys.exit(__doc__)
    shape = argv[1] if len(argv) > 1 else "circle"
    rays = int(argv[2]) if len(argv) > 2 else 40
    noise = float(argv[3]) if len(argv) > 3 else 0.0
    scan, _ = synth_scan(shape, n_rays=rays, noise=noise)
    save_scan(scan, argv[0])
    print(f"wrote {len(scan)} returns to {argv[0]}")


if __name__ == "__main__":
    main(sys.argv[1:])
