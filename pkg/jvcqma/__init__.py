"""
jvcqma

Jackknife varying-coefficient quantile model averaging: per-index local-linear
quantile regression candidates, leave-one-out weight selection over the simplex,
and a simulation / evaluation harness.
"""

__version__ = "0.1.0"
__author__ = "jvcqma developers"
