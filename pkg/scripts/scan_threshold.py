"""Scan reflection positivity of the normalized fBm kernel across H.

Prints one row per H with the number of PSD / NotPSD setups and the worst
twisted eigenvalue relative to the Gram scale.

    python3 scripts/scan_threshold.py --setups 20 --points 8 --seed 0
"""
import argparse

import numpy as np

from rpfbm.definiteness import threshold_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--setups", type=int, default=20)
    ap.add_argument("--points", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--step", type=float, default=0.05)
    args = ap.parse_args()
    hs = np.round(np.arange(args.step, 1.0 - 1e-9, args.step), 6)
    print(f"{'H':>5} {'PSD':>4} {'NotPSD':>6} {'indet':>5} {'worst ratio':>12}")
    for row in threshold_scan(hs, n_setups=args.setups, n_points=args.points, seed=args.seed):
        print(f"{row.H:5.2f} {row.n_psd:4d} {row.n_not_psd:6d} {row.n_indeterminate:5d} {row.worst_ratio:12.3e}")


if __name__ == "__main__":
    main()
