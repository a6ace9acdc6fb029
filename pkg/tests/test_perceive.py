import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import D, S, benzene, bicyclobutane, hcn, hexane, make, methane, naphthalene_skeleton
from graphqeq.errors import PerceptionError
from graphqeq.molio import AtomRecord, Molecule
from graphqeq.perceive import FEATURE_WIDTH, detect_rings, featurize, perceive_aromaticity, perceive_hybridization
from graphqeq.train import random_molecule

ELEM, HYB, AROM, RING = slice(0, 15), slice(15, 19), 19, slice(20, 26)


def nx_edge_ring_sizes(mol, max_size=8):
    """Independent oracle: smallest simple cycle through each bond, via networkx."""
    g = nx.Graph()
    g.add_nodes_from(range(mol.n_atoms))
    g.add_edges_from((a, b) for a, b, _ in mol.bonds)
    sizes = [set() for _ in range(mol.n_atoms)]
    for a, b in list(g.edges):
        g.remove_edge(a, b)
        if nx.has_path(g, a, b):
            path = nx.shortest_path(g, a, b)
            if len(path) <= max_size:
                for atom in path:
                    sizes[atom].add(len(path))
        g.add_edge(a, b)
    return sizes


def test_benzene_rings():
    assert detect_rings(benzene())[:6] == [{6}] * 6
    assert detect_rings(benzene())[6:] == [set()] * 6


def test_hexane_no_rings():
    assert detect_rings(hexane()) == [set()] * 6


def test_bicyclobutane_all_three():
    mol = bicyclobutane()
    assert detect_rings(mol) == [{3}] * 4
    g = nx.Graph([(a, b) for a, b, _ in mol.bonds])
    basis = nx.minimum_cycle_basis(g)
    assert sorted(len(c) for c in basis) == [3, 3]
    assert set().union(*basis) == {0, 1, 2, 3}


def test_naphthalene_fused_atoms():
    sizes = detect_rings(naphthalene_skeleton())
    assert sizes == [{6}] * 10


def test_large_ring_ignored():
    mol = make(["C"] * 9, [(k, (k + 1) % 9, S) for k in range(9)])
    assert detect_rings(mol) == [set()] * 9


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rings_match_networkx(seed):
    mol = random_molecule(np.random.default_rng(seed))
    assert detect_rings(mol) == nx_edge_ring_sizes(mol)


def test_cubane_rings_against_networkx():
    cube = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4), (0, 4), (1, 5), (2, 6), (3, 7)]
    mol = make(["C"] * 8, [(a, b, S) for a, b in cube])
    assert detect_rings(mol) == [{4}] * 8 == nx_edge_ring_sizes(mol)


def test_hybridization_examples():
    assert perceive_hybridization(methane()) == ["sp3"] + ["other"] * 4
    assert perceive_hybridization(benzene())[:6] == ["sp2"] * 6
    assert perceive_hybridization(benzene(kekule=True))[:6] == ["sp2"] * 6
    assert perceive_hybridization(hcn()) == ["other", "sp", "sp"]


def test_hybridization_lone_pairs():
    water = make(["O", "H", "H"], [(0, 1, S), (0, 2, S)])
    formaldehyde = make(["C", "O", "H", "H"], [(0, 1, D), (0, 2, S), (0, 3, S)])
    co2 = make(["O", "C", "O"], [(0, 1, D), (1, 2, D)])
    assert perceive_hybridization(water)[0] == "sp3"
    assert perceive_hybridization(formaldehyde)[:2] == ["sp2", "sp2"]
    assert perceive_hybridization(co2) == ["sp2", "sp", "sp2"]


def test_valence_violation():
    bad = make(["O", "C", "C", "C"], [(0, 1, D), (0, 2, S), (0, 3, S)])
    with pytest.raises(PerceptionError):
        featurize(bad)


def test_kekule_ring_aromatic_without_flags():
    assert perceive_aromaticity(benzene(kekule=True)).tolist() == [True] * 6 + [False] * 6
    cyclohexene = make(["C"] * 6, [(0, 1, D)] + [(k, (k + 1) % 6, S) for k in range(1, 6)])
    assert not perceive_aromaticity(cyclohexene).any()


def test_file_flags_win():
    atoms = [AtomRecord("C", 0, False)] * 6 + [AtomRecord("H", 0, False)] * 6
    mol = Molecule(atoms, benzene(kekule=True).bonds)
    assert not perceive_aromaticity(mol).any()


def test_feature_rows():
    x = featurize(benzene())
    assert x.shape == (12, FEATURE_WIDTH) and x.dtype == np.float32
    carbon = x[0]
    assert carbon[2] == 1 and carbon[ELEM].sum() == 1
    assert carbon[HYB].tolist() == [0, 1, 0, 0]
    assert carbon[AROM] == 1
    assert carbon[RING].tolist() == [0, 0, 0, 1, 0, 0]
    hydrogen = x[6]
    assert hydrogen[0] == 1 and hydrogen[HYB].tolist() == [0, 0, 0, 1] and hydrogen[AROM:].sum() == 0
    assert np.all(x.sum(axis=1) >= 2)


def test_isolated_atom_is_other():
    ion = Molecule([AtomRecord("Na", 1)], ())
    assert perceive_hybridization(ion) == ["other"]
    assert featurize(ion).shape == (1, FEATURE_WIDTH)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_features_permutation_equivariant(seed):
    rng = np.random.default_rng(seed)
    mol = random_molecule(rng)
    order = rng.permutation(mol.n_atoms)
    assert np.array_equal(featurize(mol.permuted(order)), featurize(mol)[order])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_features_ignore_charge_and_coordinates(seed):
    rng = np.random.default_rng(seed)
    mol = random_molecule(rng)
    atoms = [AtomRecord(a.element, int(rng.integers(-2, 3)), a.aromatic_flag) for a in mol.atoms]
    coords = [tuple(rng.normal(size=3)) for _ in atoms]
    other = Molecule(atoms, mol.bonds, coords)
    assert np.array_equal(featurize(other), featurize(mol))


def test_automorphic_atoms_equal_rows():
    x = featurize(benzene())
    assert np.all(x[:6] == x[0]) and np.all(x[6:] == x[6])
    x = featurize(methane())
    assert np.all(x[1:] == x[1])


def test_float64_option():
    assert featurize(methane(), dtype=np.float64).dtype == np.float64
