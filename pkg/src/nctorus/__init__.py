"""Exact and numerical tools for noncommutative tori and their derivations,
the SO(n,n|Z) action on skew matrices, Fock-space canonical transformations,
and the discrete Heisenberg group algebra."""
from ._accel import BACKEND
from .fock import FockOperator, FockVector, MoritaData, compose_g, conjugation_matrix
from .heisenberg import H3Element, h3_derivation_split, multiply_h3
from .lattice import SkewMatrix, degenerate_subgroup, diophantine_scan, f_value
from .measure import FrequencyVector, mc_estimate, zst_bound, zst_membership
from .sonn import BlockGroupElement, OrbitWord, act, orbit_search
from .twisted import AlgebraElement, QSpec, derivation_split, multiply

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AlgebraElement", "BlockGroupElement", "FockOperator", "FockVector",
    "FrequencyVector", "H3Element", "MoritaData", "OrbitWord", "QSpec", "SkewMatrix", "act",
    "compose_g", "conjugation_matrix", "degenerate_subgroup", "derivation_split",
    "diophantine_scan", "f_value", "h3_derivation_split", "mc_estimate", "multiply",
    "multiply_h3", "orbit_search", "zst_bound", "zst_membership",
]
