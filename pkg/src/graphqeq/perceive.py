"""Topology-only atom features.

Row layout (width 26, version ``FEATURE_LAYOUT_VERSION``)::

    [0:15]  element one-hot, order H Li C N O F Na Mg P S Cl K Ca Br I
    [15:19] hybridization one-hot, order sp sp2 sp3 other
    [19]    aromatic
    [20:26] member of a ring of size 3, 4, 5, 6, 7, 8

Nothing here reads formal charges or coordinates.

Hybridization rules, applied in order:

1. H, Li, Na, K, Mg, Ca, and atoms without neighbours -> other
2. aromatic -> sp2
3. in a triple bond -> sp
4. steric number = neighbours + lone pairs, where lone pairs are
   ``floor((valence electrons - bond order sum) / 2)`` clipped at 0 and
   aromatic bonds count 1.5:  2 -> sp, 3 -> sp2, anything else -> sp3

A bond-order sum above ``MAX_VALENCE`` for the element is an error.

Ring sizes come from the smallest ring through each ring bond (size <= 8),
found by a bounded breadth-first search that skips the bond itself.  An
atom reports the sizes of the smallest rings through its bonds.

Aromaticity comes from file flags when any atom carries one (True wins,
None counts as False).  Without flags an atom is aromatic when it lies on
one of those smallest rings whose bonds are all aromatic or strictly
alternate single/double.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from graphqeq.errors import PerceptionError
from graphqeq.molio import ELEMENT_INDEX, ELEMENTS, BondKind, Molecule

FEATURE_LAYOUT_VERSION = 1
RING_SIZES = (3, 4, 5, 6, 7, 8)
HYBRIDIZATIONS = ("sp", "sp2", "sp3", "other")
N_ELEMENTS = len(ELEMENTS)
FEATURE_WIDTH = N_ELEMENTS + len(HYBRIDIZATIONS) + 1 + len(RING_SIZES)

VALENCE_ELECTRONS = {
    "H": 1, "Li": 1, "C": 4, "N": 5, "O": 6, "F": 7, "Na": 1, "Mg": 2,
    "P": 5, "S": 6, "Cl": 7, "K": 1, "Ca": 2, "Br": 7, "I": 7,
}
MAX_VALENCE = {
    "H": 1, "Li": 1, "C": 4, "N": 4, "O": 3, "F": 1, "Na": 1, "Mg": 2,
    "P": 6, "S": 6, "Cl": 7, "K": 1, "Ca": 2, "Br": 7, "I": 7,
}
_OTHER_ELEMENTS = frozenset({"H", "Li", "Na", "K", "Mg", "Ca"})

_VE = np.array([VALENCE_ELECTRONS[e] for e in ELEMENTS], dtype=np.float64)
_MAXV = np.array([MAX_VALENCE[e] for e in ELEMENTS], dtype=np.float64)
_IS_OTHER = np.array([e in _OTHER_ELEMENTS for e in ELEMENTS])
_BOND_ORDER = {BondKind.SINGLE: 1.0, BondKind.DOUBLE: 2.0, BondKind.TRIPLE: 3.0, BondKind.AROMATIC: 1.5}


def _element_indices(mol: Molecule) -> np.ndarray:
    return np.fromiter((ELEMENT_INDEX[a.element] for a in mol.atoms), dtype=np.int64, count=mol.n_atoms)


def _bridges(n: int, adj: list[list[int]]) -> set[tuple[int, int]]:
    """Bridge edges (as sorted pairs) via iterative low-link DFS."""
    disc = [-1] * n
    low = [0] * n
    bridges = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, parent, it = stack[-1]
            advanced = False
            for w in it:
                if w == parent:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, v, iter(adj[w])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if not advanced:
                stack.pop()
                if parent != -1:
                    low[parent] = min(low[parent], low[v])
                    if low[v] > disc[parent]:
                        bridges.add((min(v, parent), max(v, parent)))
    return bridges


def _shortest_cycle_through(a: int, b: int, adj: list[list[int]], max_size: int) -> list[int] | None:
    """Shortest path b -> a avoiding edge (a, b), returned as a ring [a, ..., b]."""
    parent = {b: None}
    frontier = deque([(b, 0)])
    while frontier:
        v, depth = frontier.popleft()
        if depth >= max_size - 1:
            continue
        for w in adj[v]:
            if v == b and w == a:
                continue
            if w in parent:
                continue
            parent[w] = v
            if w == a:
                ring = [a]
                node = v
                while node is not None:
                    ring.append(node)
                    node = parent[node]
                return ring
            frontier.append((w, depth + 1))
    return None


def smallest_rings(mol: Molecule, max_size: int = RING_SIZES[-1]) -> list[tuple[int, ...]]:
    """Unique smallest rings through each ring bond, atoms in cyclic order."""
    n = mol.n_atoms
    if mol.n_bonds - n + 1 <= 0:
        return []
    adj = mol.neighbors()
    bridges = _bridges(n, adj)
    rings = {}
    for a, b, _ in mol.bonds:
        key = (a, b) if a < b else (b, a)
        if key in bridges:
            continue
        ring = _shortest_cycle_through(a, b, adj, max_size)
        if ring is not None:
            rings.setdefault(frozenset(ring), tuple(ring))
    return list(rings.values())


def detect_rings(mol: Molecule) -> list[set[int]]:
    sizes = [set() for _ in range(mol.n_atoms)]
    for ring in smallest_rings(mol):
        for atom in ring:
            sizes[atom].add(len(ring))
    return sizes


def _bond_lookup(mol: Molecule) -> dict[tuple[int, int], BondKind]:
    return {((a, b) if a < b else (b, a)): k for a, b, k in mol.bonds}


def _ring_is_aromatic(ring: tuple[int, ...], kinds: dict) -> bool:
    ring_kinds = [kinds[tuple(sorted((ring[i], ring[(i + 1) % len(ring)])))] for i in range(len(ring))]
    if all(k is BondKind.AROMATIC for k in ring_kinds):
        return True
    if len(ring) % 2:
        return False
    pattern = (BondKind.SINGLE, BondKind.DOUBLE)
    return all(k is pattern[i % 2] for i, k in enumerate(ring_kinds)) or all(
        k is pattern[(i + 1) % 2] for i, k in enumerate(ring_kinds)
    )


def perceive_aromaticity(mol: Molecule, rings: list[tuple[int, ...]] | None = None) -> np.ndarray:
    flags = [a.aromatic_flag for a in mol.atoms]
    if any(f is not None for f in flags):
        return np.array([bool(f) for f in flags])
    aromatic = np.zeros(mol.n_atoms, dtype=bool)
    if rings is None:
        rings = smallest_rings(mol)
    if rings:
        kinds = _bond_lookup(mol)
        for ring in rings:
            if _ring_is_aromatic(ring, kinds):
                aromatic[list(ring)] = True
    return aromatic


def _hybridization_codes(mol: Molecule, elem: np.ndarray, aromatic: np.ndarray) -> np.ndarray:
    n = mol.n_atoms
    degree = np.zeros(n, dtype=np.int64)
    bond_order = np.zeros(n)
    triple = np.zeros(n, dtype=bool)
    if mol.bonds:
        ends = mol.edge_index()
        orders = np.array([_BOND_ORDER[k] for _, _, k in mol.bonds])
        degree = np.bincount(ends.ravel(), minlength=n)
        bond_order = np.bincount(ends[:, 0], orders, n) + np.bincount(ends[:, 1], orders, n)
        is_triple = orders == 3.0
        triple[ends[is_triple].ravel()] = True

    over = bond_order > _MAXV[elem] + 1e-9
    if over.any():
        i = int(np.flatnonzero(over)[0])
        raise PerceptionError(
            f"atom {i} ({mol.atoms[i].element}) has bond order sum {bond_order[i]:g}, "
            f"above the maximum {MAX_VALENCE[mol.atoms[i].element]}"
        )
    lone_pairs = np.maximum(np.floor((_VE[elem] - bond_order) / 2.0), 0.0)
    steric = degree + lone_pairs
    codes = np.full(n, 2, dtype=np.int64)  # sp3
    codes[steric == 3] = 1
    codes[steric == 2] = 0
    codes[triple] = 0
    codes[aromatic] = 1
    codes[_IS_OTHER[elem] | (degree == 0)] = 3
    return codes


def perceive_hybridization(mol: Molecule) -> list[str]:
    elem = _element_indices(mol)
    codes = _hybridization_codes(mol, elem, perceive_aromaticity(mol))
    return [HYBRIDIZATIONS[c] for c in codes]


def featurize(mol: Molecule, dtype=np.float32) -> np.ndarray:
    """``(n_atoms, FEATURE_WIDTH)`` 0/1 matrix in the layout above."""
    n = mol.n_atoms
    elem = _element_indices(mol)
    rings = smallest_rings(mol)
    aromatic = perceive_aromaticity(mol, rings)
    hyb = _hybridization_codes(mol, elem, aromatic)

    x = np.zeros((n, FEATURE_WIDTH), dtype=dtype)
    rows = np.arange(n)
    x[rows, elem] = 1
    x[rows, N_ELEMENTS + hyb] = 1
    x[:, N_ELEMENTS + len(HYBRIDIZATIONS)] = aromatic
    ring_col = N_ELEMENTS + len(HYBRIDIZATIONS) + 1
    for ring in rings:
        x[list(ring), ring_col + len(ring) - RING_SIZES[0]] = 1
    return x
