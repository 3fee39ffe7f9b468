"""Pharmacophore pair-distance fingerprint on the reduced atom labeling.

Atoms receive a set of pharmacophore labels; every labeled atom pair
increments the (label pair, shortest-path distance) slot with +-1 distance
smearing at weight 0.3. The "none" label exists only to fix the pair-table
layout (21 unordered pairs over 6 labels); it is never assigned, so its
slots stay zero.
"""

from __future__ import annotations

import numpy as np

from ..chem.graph import MolecularGraph

ERG_LABELS = ("donor", "acceptor", "positive", "negative", "aromatic", "none")
SMEAR_WEIGHT = 0.3

_PAIRS = [
    (i, j) for i in range(len(ERG_LABELS)) for j in range(i, len(ERG_LABELS))
]
_PAIR_INDEX = {p: k for k, p in enumerate(_PAIRS)}

N_LABEL_PAIRS = len(_PAIRS)  # 21


def atom_labels(graph: MolecularGraph, idx: int) -> list[int]:
    """Label indices for one atom; an atom may carry several labels."""
    a = graph.atoms[idx]
    labels = []
    if a.is_h_donor:
        labels.append(0)
    if a.is_h_acceptor:
        labels.append(1)
    if a.formal_charge > 0:
        labels.append(2)
    if a.formal_charge < 0:
        labels.append(3)
    hydrophobic_aromatic = a.is_aromatic or (
        a.element == "C"
        and a.degree >= 1
        and all(graph.atoms[n].element == "C" for n in graph.neighbors(idx))
    )
    if hydrophobic_aromatic:
        labels.append(4)
    return labels


def erg_fingerprint(graph: MolecularGraph, max_path: int = 15) -> np.ndarray:
    if max_path < 1:
        raise ValueError("max_path must be >= 1")
    out = np.zeros(N_LABEL_PAIRS * max_path, dtype=np.float64)
    labeled = [(i, atom_labels(graph, i)) for i in range(graph.n_atoms)]
    labeled = [(i, ls) for i, ls in labeled if ls]
    if len(labeled) < 2:
        return out
    for ai in range(len(labeled)):
        i, labels_i = labeled[ai]
        dist = graph.shortest_path_lengths(i)
        for bi in range(ai + 1, len(labeled)):
            j, labels_j = labeled[bi]
            d = dist[j]
            if d < 1 or d > max_path:  # pairs beyond max_path are ignored
                continue
            for li in labels_i:
                for lj in labels_j:
                    pair = _PAIR_INDEX[(li, lj) if li <= lj else (lj, li)]
                    base = pair * max_path
                    for smear, weight in ((d - 1, SMEAR_WEIGHT), (d, 1.0), (d + 1, SMEAR_WEIGHT)):
                        if 1 <= smear <= max_path:
                            out[base + smear - 1] += weight
    return out


def erg_length(max_path: int = 15) -> int:
    return N_LABEL_PAIRS * max_path
