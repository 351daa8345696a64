#!/usr/bin/env python3
"""Inextensible elastic rod with the reference boundary data."""

import sys

from bundle_newton.cli import main

if __name__ == "__main__":
    sys.exit(main(["rod", "--n", "100", "--out-dir", "out/rod_n100"]))
