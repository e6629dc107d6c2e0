#!/usr/bin/env python3
"""
Prior Conflict Checker

Score-based prior-data conflict checks: the score of a prior expansion,
calibrated against the prior predictive distribution by Monte Carlo.

Models:
- Normal location, binomial-beta and normal-inverse-gamma (closed forms)
- Laplace (LASSO) prior for many means and regression
- Constrained Dirichlet priors for a distorted trine measurement

Usage:
    python main.py check normal --mu0 0 --tau0sq 1 --sigmasq 1 --y 2.5
    python main.py lasso means-crit --n 10 --draws 100000
    python main.py quantum physical --config config/quantum_experiment.json
    python main.py reproduce lasso-means-power --preset desk --workers 4 --out means_power.csv
    python main.py reproduce quantum-experiment --describe
"""

import sys


def main():
    """Main entry point."""
    from src.cli.commands import run
    sys.exit(run())


if __name__ == '__main__':
    main()
