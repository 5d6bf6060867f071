"""Spectral sketches of graph Laplacians and their pseudoinverses.

Quick tour::

    from lapsketch import generators, build_sketch, build_pinv_sketch, all_pairs_resistances

    G = generators.erdos_renyi(128, 0.2, seed=1)
    sk = build_sketch(G, 0.25, seed=7)        # f(x) ~ x^T L x
    psk = build_pinv_sketch(G, 0.25, seed=7)  # g(b) ~ b^T L^+ b
    R = all_pairs_resistances(G, 0.25, copies=9).table()
"""
from .allpairs import ResistanceMatrix, all_pairs_resistances, build_Q, matrixize
from .errors import (CertificationError, DimensionError, DomainError, IngestError,
                     LapSketchError, PreconditionError, RangeViolation)
from .graph import (CutSpec, WeightedGraph, bit_bucket, connected_components, cut_conductance,
                    induced_subgraph, quadratic_form, read_edge_list)
from .partition import PartitionResult, expander_round, second_eigvec_estimate, split, sweep_cut
from .pinv import PseudoinverseSketch, build_pinv_sketch, eval_pinv_sketch, q_form, resistance_query
from .sketch import (ComponentSketchData, LaplacianSketch, boosted_eval, build_sketch,
                     eval_sketch, expander_eval, sample_sketch)
from .solver import SolverOperator, apply_solver, build_preconditioner, build_solver_operator, sparsify

__version__ = "0.1.0"

__all__ = [
    "CertificationError", "ComponentSketchData", "CutSpec", "DimensionError", "DomainError",
    "IngestError", "LapSketchError", "LaplacianSketch", "PartitionResult", "PreconditionError",
    "PseudoinverseSketch", "RangeViolation", "ResistanceMatrix", "SolverOperator", "WeightedGraph",
    "all_pairs_resistances", "apply_solver", "bit_bucket", "boosted_eval", "build_Q",
    "build_pinv_sketch", "build_preconditioner", "build_sketch", "build_solver_operator",
    "connected_components", "cut_conductance", "eval_pinv_sketch", "eval_sketch",
    "expander_eval", "expander_round", "induced_subgraph", "matrixize", "q_form",
    "quadratic_form", "read_edge_list", "resistance_query", "sample_sketch",
    "second_eigvec_estimate", "sparsify", "split", "sweep_cut",
]
