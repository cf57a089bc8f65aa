"""Transitivity of conservative toral endomorphisms: exact linear classification,
chain-form maps, grid topology and a symbolic-image laboratory."""

from .endo import Endomorphism, check_conservative, evaluate, load_endomorphism, make_counterexample, preimages
from .grid import GridOpenSet, components, perp, regularize, winding_class
from .lab import find_invariant_pair, orbit_coverage, scc_transitivity, transitivity_report, build_symbolic_image
from .linear import Case, IntMatrix2, classify, is_all_transitive_class, parse_matrix
from .torus import TorusPoint, project

__version__ = "0.1.0"
