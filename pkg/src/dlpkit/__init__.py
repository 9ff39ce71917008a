"""Monotone restoration, model-order search and shape detection toolkit."""

from .lattice import BoolVec, ChainCover, HanselChain, hansel_chains
from .mbf import FnTable, lower_units, restore, shannon_bound
from .trace import Trace, TraceEvent

__version__ = "0.1.0"

__all__ = [
    "BoolVec", "ChainCover", "HanselChain", "hansel_chains",
    "FnTable", "lower_units", "restore", "shannon_bound",
    "Trace", "TraceEvent",
]
