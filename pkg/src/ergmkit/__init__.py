"""Sampling and analysis toolkit for exponential random graph models.

Dense graphs with bit-packed adjacency, exact and incremental homomorphism
densities, scalar landscape analysis, Glauber chains with couplings,
concentration diagnostics, and an exact tiny-n enumeration oracle.
"""

from .graph import Graph, edge_index, edge_pair, sample_gnp
from .templates import TemplateGraph, TemplateFamily, make_template, default_family
from .model import ModelParams
from .rng import make_rng

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "edge_index",
    "edge_pair",
    "sample_gnp",
    "TemplateGraph",
    "TemplateFamily",
    "make_template",
    "default_family",
    "ModelParams",
    "make_rng",
    "__version__",
]
