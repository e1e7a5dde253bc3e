"""Spectral clustering of stochastic blockmodel graphs with BIC model selection."""

__version__ = "0.1.0"

from .evaluate import ari, wilcoxon_rank_sum
from .gmm import cluster_vertices, fit_gmm, select_model
from .graph import Graph, load_edge_list, project_covisitation
from .partition import Partition
from .sbm import SbmParams, sample_sbm
from .spectral import ase_embed, estimate_dimension, lap_embed, top_eigenpairs

__all__ = [
    "Graph", "Partition", "SbmParams", "ari", "ase_embed", "cluster_vertices",
    "estimate_dimension", "fit_gmm", "lap_embed", "load_edge_list", "project_covisitation",
    "sample_sbm", "select_model", "top_eigenpairs", "wilcoxon_rank_sum",
]
