#!/usr/bin/env python3
"""Elastic geodesic in the winding force field, for several grid sizes."""

import sys

from bundle_newton.cli import main

if __name__ == "__main__":
    code = 0
    for n in (100, 1000, 10000):
        code |= main(
            ["geodesic-force", "--n", str(n), "--out-dir", f"out/geodesic_force_n{n}"]
        )
    sys.exit(code)
