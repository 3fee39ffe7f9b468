"""Ring-system scaffolds for scaffold-based dataset splitting."""

from __future__ import annotations

from .graph import MolecularGraph, induced_subgraph
from .perception import annotate

EMPTY_SCAFFOLD_HASH = "empty-scaffold"


def murcko_scaffold(graph: MolecularGraph) -> MolecularGraph:
    """Bemis-Murcko scaffold: prune non-ring atoms of degree <= 1 until fixed.

    Ring systems and the linkers between them survive; an acyclic molecule
    collapses to the empty scaffold.
    """
    keep = set(range(graph.n_atoms))
    in_ring = {a.index for a in graph.atoms if a.in_ring}
    changed = True
    while changed:
        changed = False
        for idx in sorted(keep):
            if idx in in_ring:
                continue
            degree = sum(1 for nbr in graph.neighbors(idx) if nbr in keep)
            if degree <= 1:
                keep.remove(idx)
                changed = True
    scaffold = induced_subgraph(graph, sorted(keep))
    if scaffold.n_atoms:
        annotate(scaffold)
    return scaffold


def scaffold_hash(graph: MolecularGraph) -> str:
    """Canonical hash of the molecule's scaffold.

    All acyclic molecules share one bucket so that scaffold splits group them
    deterministically.
    """
    scaffold = murcko_scaffold(graph)
    if scaffold.n_atoms == 0:
        return EMPTY_SCAFFOLD_HASH
    return scaffold.graph_hash()
