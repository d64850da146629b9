#!/usr/bin/env python3
"""Interference scan of the dipole-pulse duration for the three-step walk.

Runs the near scan (optimum location) and optionally the extended scan that
exposes the direction-exchanged secondary walks.  Heavy: a few minutes at
the exact-coupling level, scaling with --points and --workers.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from ionwalk import cli


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/td-scan")
    parser.add_argument("--mode", choices=["near", "extended"], default="near")
    parser.add_argument("--points", type=int, default=21)
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--level", default="3SB", choices=["LDA", "RWA", "3SB"])
    args = parser.parse_args()
    ctx = cli.run_scenario(
        "scan-td",
        overrides={"mode": args.mode, "points": args.points, "level": args.level},
        out_dir=args.out,
        workers=args.workers,
    )
    print(f"wrote {ctx.artifacts} to {ctx.out_dir}")


if __name__ == "__main__":
    main()
