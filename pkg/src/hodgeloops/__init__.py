"""Harmonic embeddings of 2-complexes, their unmixing into per-hole bases, and shortest homologous loops."""

__version__ = "0.1.0"

from .boundary import ClosureError, boundary_maps, cell_boundary_matrix, incidence_matrix
from .complexes import (Complex2, GrayImage, NeighborhoodGraph, cknn_graph, clique_complex,
                        cubical_complex, furthest_point_sample, triangle_weights)
from .hodge import HodgeSystem, WeightVector, assemble, hodge_from_complex, propagate_weights
from .ica import UnmixingResult, ica_no_prewhite
from .loops import LoopResult, certify_nontrivial, induce_digraph, shortest_homologous_loops, shortest_loops_maxedge
from .nullspace import BettiAmbiguity, ConvergenceError, HomologyBasis, estimate_betti, homology_basis

__all__ = [
    "BettiAmbiguity", "ClosureError", "Complex2", "ConvergenceError", "GrayImage", "HodgeSystem",
    "HomologyBasis", "LoopResult", "NeighborhoodGraph", "UnmixingResult", "WeightVector", "assemble",
    "boundary_maps", "cell_boundary_matrix", "certify_nontrivial", "cknn_graph", "clique_complex",
    "cubical_complex", "estimate_betti", "furthest_point_sample", "hodge_from_complex", "homology_basis",
    "ica_no_prewhite", "incidence_matrix", "induce_digraph", "propagate_weights",
    "shortest_homologous_loops", "shortest_loops_maxedge", "triangle_weights",
]
