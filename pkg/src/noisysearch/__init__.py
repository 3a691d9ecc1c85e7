"""Quantum unstructured search with noisy oracles.

A simulation and numerical-certification toolkit: noisy oracle calls
(depolarizing / dephasing, error-concealing / error-signaling), exact and
trajectory execution of query algorithms, the almost-optimal noisy search
procedure, and an executable version of the purified-computation progress
machinery with its exact identities, closed-form norms, and per-call
inequalities checked numerically.
"""

from . import cli, lowerbound, oracles, qcore, reporting, runtime, search

__version__ = "0.1.0"

__all__ = ["cli", "lowerbound", "oracles", "qcore", "reporting", "runtime",
           "search", "__version__"]
