#!/usr/bin/env python3
"""
admg-bayes - CLI Entry Point.

Bayesian inference for Gaussian acyclic directed mixed graph models:
G-IW sampling, normalizing constants, graph scoring, Gibbs and variational
fits, and the DAG-baseline benchmark.

Usage:
    python main.py normconst --graph g.txt --seed 1
    python main.py fit --graph g.txt --data train.csv --seed 1 --engine gibbs,vb
    python main.py replay --manifest runs/fit-1a2b3c4d/manifest.json
"""

import sys

from core.harness import Harness


def main() -> int:
    """Main entry point; returns the process exit code."""
    return Harness().execute(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
