#!/usr/bin/env python3
"""Position distributions and spread-scaling data for the ideal lattice walk.

Writes positions.csv, sigma.csv and scaling.csv under --out for a grid of
lattice spacings.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from ionwalk import cli


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/walk-scaling")
    parser.add_argument("--steps", type=int, default=100)
    parser.add_argument("--step-size", type=float, default=2.0)
    args = parser.parse_args()
    ctx = cli.run_scenario(
        "walk-ideal",
        overrides={"steps": args.steps, "step_size": args.step_size},
        out_dir=args.out,
    )
    print(f"wrote {ctx.artifacts} to {ctx.out_dir}")


if __name__ == "__main__":
    main()
