"""Lower central series quotients N_i = M_i / M_{i+1} of algebras given by generators and relations."""

from .exact_linalg import GroupInvariants, lattice_quotient, rank_mod_p, smith_form, smith_normal_form
from .free_algebra import Element, bracket, multiply, parse_element, parse_relations, render
from .lcs_engine import (
    AlgebraPresentation,
    BigradedTable,
    IncompleteTableError,
    Ring,
    hilbert_series,
    n_component,
    n_table,
)

__version__ = "0.1.0"

__all__ = [
    "AlgebraPresentation",
    "BigradedTable",
    "Element",
    "GroupInvariants",
    "IncompleteTableError",
    "Ring",
    "bracket",
    "hilbert_series",
    "lattice_quotient",
    "multiply",
    "n_component",
    "n_table",
    "parse_element",
    "parse_relations",
    "rank_mod_p",
    "render",
    "smith_form",
    "smith_normal_form",
]
