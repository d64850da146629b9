#!/usr/bin/env python3
"""Photon-kick pulse-duration thresholds versus motional amplitude.

Measures the longest pi-pulse keeping 0.99 kick fidelity for kicks at the
trap center and at the turning point, fits the threshold curves, and
evaluates the reference curves at the 100-step walk amplitude.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from ionwalk import cli


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/kick-thresholds")
    parser.add_argument("--alpha-max", type=float, default=10.0)
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = parser.parse_args()
    ctx = cli.run_scenario(
        "kick-threshold",
        overrides={"alpha_max": args.alpha_max},
        out_dir=args.out,
        workers=args.workers,
    )
    print(f"wrote {ctx.artifacts} to {ctx.out_dir}")


if __name__ == "__main__":
    main()
