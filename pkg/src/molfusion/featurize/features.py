"""Atom/bond feature tensors, normalized adjacency and fingerprint assembly.

Atom rows are 57-wide, bond vectors 13-wide. Layout (offsets inclusive):

    atom: symbol one-hot [0..15] (12 named labels + "other" at 12; 13..15
          reserved zero) | degree one-hot [16..21] (0..5, overflow clipped) |
          formal charge [22] | radical electrons [23] | hybridization one-hot
          [24..29] | aromatic [30] | hydrogen count one-hot [31..35] (0..4+) |
          chirality one-hot [36..39] | ring flag [40] | smallest-ring-size
          one-hot [41..44] (sizes 3-6; >=7 leaves all zero) | atomic mass/100
          [45] | implicit valence one-hot [46..52] (0..6+) | H-acceptor [53] |
          H-donor [54] | acidic [55] | basic [56]

    bond: type one-hot [0..4] ("exists" always set, then single/double/
          triple/aromatic) | conjugated [5] | in ring [6] | stereo one-hot
          [7..12] (codes 0-5)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..chem.graph import BondOrder, Chirality, Hybridization, MolecularGraph
from .erg import erg_fingerprint, erg_length
from .keys import KeyTable, default_key_table, substructure_key_fingerprint
from .morgan import morgan_fingerprint

log = logging.getLogger(__name__)

ATOM_FEATURE_DIM = 57
BOND_FEATURE_DIM = 13

_SYMBOLS = ("C", "N", "O", "F", "Si", "Cl", "As", "Se", "Br", "Te", "I", "At")
_SYMBOL_OTHER_SLOT = len(_SYMBOLS)  # 12; slots 13..15 reserved
_HYBRIDIZATIONS = (
    Hybridization.SP,
    Hybridization.SP2,
    Hybridization.SP3,
    Hybridization.SP3D,
    Hybridization.SP3D2,
    Hybridization.OTHER,
)
_CHIRALITIES = (
    Chirality.NONE,
    Chirality.TETRAHEDRAL_CW,
    Chirality.TETRAHEDRAL_CCW,
    Chirality.OTHER,
)
_BOND_ORDERS = (BondOrder.SINGLE, BondOrder.DOUBLE, BondOrder.TRIPLE, BondOrder.AROMATIC)

FINGERPRINT_COMPONENTS = ("morgan", "keys", "erg")


@dataclass
class FeaturizeConfig:
    morgan_radius: int = 2
    morgan_bits: int = 2048
    erg_max_path: int = 15
    components: tuple[str, ...] = FINGERPRINT_COMPONENTS
    key_table_path: str | None = None

    def __post_init__(self):
        for c in self.components:
            if c not in FINGERPRINT_COMPONENTS:
                raise ValueError(f"unknown fingerprint component {c!r}")
        self.components = tuple(self.components)

    def key_table(self) -> KeyTable:
        if self.key_table_path is None:
            return default_key_table()
        return KeyTable.load(self.key_table_path)

    @property
    def fingerprint_length(self) -> int:
        total = 0
        if "morgan" in self.components:
            total += self.morgan_bits
        if "keys" in self.components:
            total += len(self.key_table())
        if "erg" in self.components:
            total += erg_length(self.erg_max_path)
        return total

    def to_dict(self) -> dict:
        return {
            "morgan_radius": self.morgan_radius,
            "morgan_bits": self.morgan_bits,
            "erg_max_path": self.erg_max_path,
            "components": list(self.components),
            "key_table_path": self.key_table_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeaturizeConfig":
        d = dict(d)
        if "components" in d:
            d["components"] = tuple(d["components"])
        return cls(**d)


@dataclass
class FeaturizedMolecule:
    atom_features: np.ndarray  # [n_atoms, 57]
    bond_features: dict[tuple[int, int], np.ndarray]  # symmetric, 13-wide
    adjacency_normalized: np.ndarray  # [n_atoms, n_atoms], rows sum to 1
    fingerprint: np.ndarray
    n_atoms: int
    _edges: tuple[np.ndarray, np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    def directed_edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(src, dst, bond feature matrix [E,13]) over directed edges.

        Edge (v, u) means u is a neighbor of v; sorted for determinism.
        """
        if self._edges is None:
            pairs = sorted({(v, u) for (v, u) in self.bond_features})
            src = np.array([p[0] for p in pairs], dtype=np.int64)
            dst = np.array([p[1] for p in pairs], dtype=np.int64)
            if pairs:
                feats = np.stack([self.bond_features[p] for p in pairs])
            else:
                feats = np.zeros((0, BOND_FEATURE_DIM), dtype=np.float64)
            self._edges = (src, dst, feats)
        return self._edges


def featurize_atoms(graph: MolecularGraph) -> np.ndarray:
    out = np.zeros((graph.n_atoms, ATOM_FEATURE_DIM), dtype=np.float64)
    for i, a in enumerate(graph.atoms):
        row = out[i]
        try:
            row[_SYMBOLS.index(a.element)] = 1.0
        except ValueError:
            row[_SYMBOL_OTHER_SLOT] = 1.0
        degree = a.degree
        if degree > 5:
            log.warning("atom %d degree %d overflows one-hot, clipping to 5", i, degree)
            degree = 5
        row[16 + degree] = 1.0
        row[22] = float(a.formal_charge)
        row[23] = float(a.radical_electrons)
        row[24 + _HYBRIDIZATIONS.index(a.hybridization)] = 1.0
        row[30] = 1.0 if a.is_aromatic else 0.0
        row[31 + min(a.total_hs, 4)] = 1.0
        row[36 + _CHIRALITIES.index(a.chirality)] = 1.0
        row[40] = 1.0 if a.in_ring else 0.0
        if 3 <= a.min_ring_size <= 6:
            row[41 + a.min_ring_size - 3] = 1.0
        row[45] = a.mass / 100.0
        row[46 + min(a.implicit_valence, 6)] = 1.0
        row[53] = 1.0 if a.is_h_acceptor else 0.0
        row[54] = 1.0 if a.is_h_donor else 0.0
        row[55] = 1.0 if a.is_acidic else 0.0
        row[56] = 1.0 if a.is_basic else 0.0
    return out


def featurize_bonds(graph: MolecularGraph) -> dict[tuple[int, int], np.ndarray]:
    out: dict[tuple[int, int], np.ndarray] = {}
    for b in graph.bonds:
        vec = np.zeros(BOND_FEATURE_DIM, dtype=np.float64)
        vec[0] = 1.0  # "exists"
        vec[1 + _BOND_ORDERS.index(b.order)] = 1.0
        vec[5] = 1.0 if b.is_conjugated else 0.0
        vec[6] = 1.0 if b.in_ring else 0.0
        vec[7 + b.stereo] = 1.0
        out[(b.u, b.v)] = vec
        out[(b.v, b.u)] = vec
    return out


def normalized_adjacency(graph: MolecularGraph) -> np.ndarray:
    """Row-normalized adjacency with self-loops: D^-1 (Adj + I)."""
    n = graph.n_atoms
    adj = np.eye(n, dtype=np.float64)
    for b in graph.bonds:
        adj[b.u, b.v] = 1.0
        adj[b.v, b.u] = 1.0
    return adj / adj.sum(axis=1, keepdims=True)


def concat_fingerprints(morgan: np.ndarray, keys: np.ndarray, erg: np.ndarray) -> np.ndarray:
    return np.concatenate([morgan, keys, erg])


def compute_fingerprint(graph: MolecularGraph, config: FeaturizeConfig) -> np.ndarray:
    parts = []
    if "morgan" in config.components:
        parts.append(morgan_fingerprint(graph, config.morgan_radius, config.morgan_bits))
    if "keys" in config.components:
        parts.append(substructure_key_fingerprint(graph, config.key_table()))
    if "erg" in config.components:
        parts.append(erg_fingerprint(graph, config.erg_max_path))
    if not parts:
        return np.zeros(0, dtype=np.float64)
    return np.concatenate(parts)


def featurize(graph: MolecularGraph, config: FeaturizeConfig | None = None) -> FeaturizedMolecule:
    config = config or FeaturizeConfig()
    return FeaturizedMolecule(
        atom_features=featurize_atoms(graph),
        bond_features=featurize_bonds(graph),
        adjacency_normalized=normalized_adjacency(graph),
        fingerprint=compute_fingerprint(graph, config),
        n_atoms=graph.n_atoms,
    )
