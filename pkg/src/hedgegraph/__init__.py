"""Signed-graph hedge scoring, motif counting, and portfolio universe reduction.

Daily returns induce a complete signed graph per trading day (assets joined
positively when they deviate from their window means on the same side).
This package scores assets by how often they hedge the rest of the
universe, counts the signed motifs that proxy diversification, reduces the
tradable universe to a top-K subset, and backtests the result year over
year.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND

__all__ = ["KERNEL_BACKEND", "__version__"]
