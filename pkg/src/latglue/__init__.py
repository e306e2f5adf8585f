"""Exact lattice invariants, genus symbols and unimodular gluing."""

from .bianchi import bianchi_index, ring_mod2
from .genus import genus_exists, genus_spec, oddity_formula_check, padic_symbol
from .gluing import embed_unimodular, verify_embedding
from .lattice import Lattice, discriminant_group, make_lattice

__all__ = [
    "Lattice",
    "bianchi_index",
    "discriminant_group",
    "embed_unimodular",
    "genus_exists",
    "genus_spec",
    "make_lattice",
    "oddity_formula_check",
    "padic_symbol",
    "ring_mod2",
    "verify_embedding",
]
