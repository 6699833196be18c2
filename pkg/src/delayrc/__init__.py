"""Delay-based reservoir computing with a Hopf-normal-form node: simulation,
Legendre memory capacities and NARMA10 benchmarks."""

__version__ = "0.1.0"
