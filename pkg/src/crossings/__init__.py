"""Crossing probabilities of critical two-dimensional percolation.

Closed-form conformal predictions cross-checked against lattice Monte Carlo,
exhaustive random-cluster enumeration and Loewner-evolution races.
"""

__version__ = "0.1.0"
