#!/usr/bin/env python3
"""Reconstruction stability sweep for the reference ellipse acquisition.

Simulates the ellipse (axes 2 and 1) inside the N=51, R=2 ring, then for each
noise level reconstructs over 100 noise draws, averages the reconstructions,
and tabulates relative errors per order together with the resolving order.
Emits CSV tables suitable for replotting the stability figures.
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from cgptid.cli import ExperimentConfig, cmd_sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="sweep")
    parser.add_argument("--trials", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--sigma0",
        default=None,
        help="comma-separated noise levels; default: log grid over [1e-3, 1]",
    )
    args = parser.parse_args()
    if args.sigma0:
        sigma0 = [float(v) for v in args.sigma0.split(",")]
    else:
        sigma0 = [float(f"{v:.6g}") for v in np.logspace(-3, 0, 13)]
    config = ExperimentConfig(
        shape="ellipse:1,0.5",
        n_receivers=51,
        radius=2.0,
        sigma0=sigma0,
        trials=args.trials,
        tau0=0.1,
        seed=args.seed,
        out=args.out,
    )
    out = cmd_sweep(config)
    for row in out["rows"]:
        print(f"sigma0={row[0]:<8g} K={row[2]:<3d} m0={row[3]:<3d} rel_err@m0={row[4]:.3e}")


if __name__ == "__main__":
    main()
