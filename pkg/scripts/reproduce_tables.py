#!/usr/bin/env python3
"""Regenerate every shipped optimum table into an output directory.

Runs the table presets (symmetric tree with single-photon and threshold
heralding, release-latest storage loop incl. the thermal variant, binary
delay network) plus the single-photon-probability curve family.

Usage:
    python scripts/reproduce_tables.py [--outdir out] [--workers K]
"""

import argparse
import os
import sys

from muxsps.cli import main as muxsps_main

TABLE_PRESETS = ["ssm-spd", "ssm-threshold", "loop-latest", "loop-latest-thermal", "btm", "ssm-curves"]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="out", help="directory for the emitted tables")
    parser.add_argument("--workers", type=int, default=os.cpu_count())
    args = parser.parse_args()

    os.makedirs(args.outdir, exist_ok=True)
    for preset in TABLE_PRESETS:
        out_path = os.path.join(args.outdir, f"{preset}.csv")
        print(f"table --preset {preset} -> {out_path}", file=sys.stderr)
        status = muxsps_main(
            ["table", "--preset", preset, "--out", out_path, "--workers", str(args.workers)]
        )
        if status != 0:
            return status
    return 0


if __name__ == "__main__":
    sys.exit(main())
