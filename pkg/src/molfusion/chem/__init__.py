"""SMILES parsing and molecular graph perception."""

from .errors import (
    EmptyInputError,
    SmilesError,
    UnbalancedParenError,
    UnclosedRingError,
    UnknownElementError,
    ValenceViolationError,
)
from .graph import Atom, Bond, BondOrder, Chirality, Hybridization, MolecularGraph
from .perception import annotate, perceive_rings
from .scaffold import EMPTY_SCAFFOLD_HASH, murcko_scaffold, scaffold_hash
from .smiles import parse_smiles

__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "Chirality",
    "EmptyInputError",
    "EMPTY_SCAFFOLD_HASH",
    "Hybridization",
    "MolecularGraph",
    "SmilesError",
    "UnbalancedParenError",
    "UnclosedRingError",
    "UnknownElementError",
    "ValenceViolationError",
    "annotate",
    "murcko_scaffold",
    "parse_smiles",
    "perceive_rings",
    "scaffold_hash",
]
