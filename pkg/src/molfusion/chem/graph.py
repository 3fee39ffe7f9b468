"""Molecular graph containers: atoms, bonds and their derived annotations."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence


class Chirality(Enum):
    NONE = "none"
    TETRAHEDRAL_CW = "tetrahedral_cw"
    TETRAHEDRAL_CCW = "tetrahedral_ccw"
    OTHER = "other"


class BondOrder(Enum):
    SINGLE = "single"
    DOUBLE = "double"
    TRIPLE = "triple"
    AROMATIC = "aromatic"

    @property
    def valence(self) -> float:
        """Bond-order contribution to valence; aromatic counts 1.5."""
        return _ORDER_VALENCE[self]


_ORDER_VALENCE = {
    BondOrder.SINGLE: 1.0,
    BondOrder.DOUBLE: 2.0,
    BondOrder.TRIPLE: 3.0,
    BondOrder.AROMATIC: 1.5,
}


class Hybridization(Enum):
    SP = "sp"
    SP2 = "sp2"
    SP3 = "sp3"
    SP3D = "sp3d"
    SP3D2 = "sp3d2"
    OTHER = "other"


# Bond stereo codes (6-slot one-hot in bond features):
# 0 none, 1 any, 2 Z, 3 E, 4 cis, 5 trans. Only 0, 2 and 3 are produced by
# the parser's minimal double-bond perception.
STEREO_NONE = 0
STEREO_Z = 2
STEREO_E = 3


@dataclass
class Atom:
    element: str
    formal_charge: int = 0
    explicit_hs: int = 0
    is_aromatic: bool = False
    chirality: Chirality = Chirality.NONE
    index: int = -1
    # Derived annotations, populated by perception.annotate().
    degree: int = 0
    implicit_hs: int = 0
    radical_electrons: int = 0
    bond_order_sum: int = 0
    hybridization: Hybridization = Hybridization.OTHER
    in_ring: bool = False
    min_ring_size: int = 0  # 0 when not in a ring
    is_h_donor: bool = False
    is_h_acceptor: bool = False
    is_acidic: bool = False
    is_basic: bool = False
    mass: float = 0.0

    @property
    def total_hs(self) -> int:
        return self.explicit_hs + self.implicit_hs

    @property
    def implicit_valence(self) -> int:
        # Implicit valence is the implicit hydrogen count (the usual proxy).
        return self.implicit_hs


@dataclass
class Bond:
    u: int
    v: int
    order: BondOrder
    stereo: int = STEREO_NONE
    in_ring: bool = False
    is_conjugated: bool = False

    def other(self, idx: int) -> int:
        return self.v if idx == self.u else self.u

    @property
    def key(self) -> tuple[int, int]:
        return (self.u, self.v) if self.u < self.v else (self.v, self.u)


class MolecularGraph:
    """Heavy-atom molecular graph with perceived annotations.

    Atoms are indexed 0..n-1; at most one bond per atom pair. ``rings`` holds
    the smallest set of smallest rings as ordered atom-index cycles.
    """

    def __init__(self, atoms: Sequence[Atom], bonds: Sequence[Bond]):
        self.atoms: list[Atom] = list(atoms)
        self.bonds: list[Bond] = list(bonds)
        self.rings: list[list[int]] = []
        for i, atom in enumerate(self.atoms):
            atom.index = i
        self._adjacency: list[list[Bond]] = [[] for _ in self.atoms]
        seen: set[tuple[int, int]] = set()
        for bond in self.bonds:
            if bond.u == bond.v:
                raise ValueError(f"self-bond on atom {bond.u}")
            if bond.key in seen:
                raise ValueError(f"duplicate bond between atoms {bond.key}")
            seen.add(bond.key)
            self._adjacency[bond.u].append(bond)
            self._adjacency[bond.v].append(bond)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    def bonds_of(self, idx: int) -> list[Bond]:
        return self._adjacency[idx]

    def neighbors(self, idx: int) -> list[int]:
        return [b.other(idx) for b in self._adjacency[idx]]

    def bond_between(self, u: int, v: int) -> Bond | None:
        for bond in self._adjacency[u]:
            if bond.other(u) == v:
                return bond
        return None

    def components(self) -> list[list[int]]:
        """Connected components as sorted atom-index lists."""
        seen = [False] * self.n_atoms
        out = []
        for start in range(self.n_atoms):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                a = stack.pop()
                comp.append(a)
                for nbr in self.neighbors(a):
                    if not seen[nbr]:
                        seen[nbr] = True
                        stack.append(nbr)
            out.append(sorted(comp))
        return out

    def shortest_path_lengths(self, start: int) -> list[int]:
        """BFS hop distances from ``start`` (-1 for unreachable atoms)."""
        dist = [-1] * self.n_atoms
        dist[start] = 0
        queue = [start]
        while queue:
            nxt = []
            for a in queue:
                for nbr in self.neighbors(a):
                    if dist[nbr] < 0:
                        dist[nbr] = dist[a] + 1
                        nxt.append(nbr)
            queue = nxt
        return dist

    def relabel(self, perm: Sequence[int]) -> "MolecularGraph":
        """Return a copy with atom i moved to position perm[i].

        Derived annotations are carried over; rings are remapped. Used for
        order-insensitivity checks.
        """
        if sorted(perm) != list(range(self.n_atoms)):
            raise ValueError("perm must be a permutation of atom indices")
        new_atoms: list[Atom] = [None] * self.n_atoms  # type: ignore[list-item]
        for i, atom in enumerate(self.atoms):
            moved = Atom(**{f: getattr(atom, f) for f in _ATOM_FIELDS})
            moved.index = perm[i]
            new_atoms[perm[i]] = moved
        new_bonds = [
            Bond(perm[b.u], perm[b.v], b.order, b.stereo, b.in_ring, b.is_conjugated)
            for b in self.bonds
        ]
        out = MolecularGraph(new_atoms, new_bonds)
        out.rings = [[perm[a] for a in ring] for ring in self.rings]
        return out

    def graph_hash(self) -> str:
        """Canonical-by-refinement hash; equal for isomorphic parses.

        Iterated neighborhood hashing (Weisfeiler-Lehman style) over atom
        invariants and bond orders, run n_atoms rounds, then digested as a
        sorted multiset. Collisions between non-isomorphic molecules are
        possible in principle but not observed at this scale.
        """
        codes = [
            _h64(
                a.element.encode(),
                struct.pack("<iii?", a.formal_charge, a.explicit_hs + a.implicit_hs, 0, a.is_aromatic),
            )
            for a in self.atoms
        ]
        for _ in range(max(1, self.n_atoms)):
            nxt = []
            for i in range(self.n_atoms):
                nbrs = sorted(
                    (b.order.value, codes[b.other(i)]) for b in self._adjacency[i]
                )
                payload = struct.pack("<Q", codes[i]) + b"".join(
                    o.encode() + struct.pack("<Q", c) for o, c in nbrs
                )
                nxt.append(_h64(payload))
            codes = nxt
        digest = hashlib.blake2b(digest_size=16)
        for c in sorted(codes):
            digest.update(struct.pack("<Q", c))
        digest.update(struct.pack("<II", self.n_atoms, self.n_bonds))
        return digest.hexdigest()


_ATOM_FIELDS = [f for f in Atom.__dataclass_fields__]  # noqa: C416 - insertion order


def _h64(*chunks: bytes) -> int:
    h = hashlib.blake2b(digest_size=8)
    for chunk in chunks:
        h.update(chunk)
    return struct.unpack("<Q", h.digest())[0]


def induced_subgraph(g: MolecularGraph, keep: Iterable[int]) -> MolecularGraph:
    """Subgraph on ``keep`` (order preserved), bonds restricted to kept atoms."""
    keep = list(keep)
    remap = {old: new for new, old in enumerate(keep)}
    atoms = []
    for old in keep:
        src = g.atoms[old]
        atoms.append(Atom(**{f: getattr(src, f) for f in _ATOM_FIELDS}))
    bonds = [
        Bond(remap[b.u], remap[b.v], b.order, b.stereo)
        for b in g.bonds
        if b.u in remap and b.v in remap
    ]
    return MolecularGraph(atoms, bonds)
