"""Comparison methods: Louvain modularity and ICL-selected variational SBM."""

from .icl import IclFit, icl_fit, icl_select, icl_sweep
from .louvain import louvain, modularity

__all__ = ["IclFit", "icl_fit", "icl_select", "icl_sweep", "louvain", "modularity"]
