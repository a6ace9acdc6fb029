from pathlib import Path

import numpy as np
import pytest

from graphqeq.molio import AtomRecord, BondKind, Molecule

FIXTURES = Path(__file__).parent / "fixtures"

S, D, T, A = BondKind.SINGLE, BondKind.DOUBLE, BondKind.TRIPLE, BondKind.AROMATIC


def fixture_text(name):
    return (FIXTURES / name).read_text()


def make(elements, bonds, charges=None, name=""):
    charges = charges or [0] * len(elements)
    atoms = [AtomRecord(el, fc) for el, fc in zip(elements, charges)]
    return Molecule(atoms=atoms, bonds=bonds, name=name)


def methane():
    return make(["C", "H", "H", "H", "H"], [(0, i, S) for i in range(1, 5)], name="methane")


def benzene(kekule=False):
    ring = [(k, (k + 1) % 6, (D if k % 2 == 0 else S) if kekule else A) for k in range(6)]
    return make(["C"] * 6 + ["H"] * 6, ring + [(k, k + 6, S) for k in range(6)], name="benzene")


def hexane():
    return make(["C"] * 6, [(k, k + 1, S) for k in range(5)], name="hexane")


def bicyclobutane():
    # bridgeheads 0 and 1
    return make(["C"] * 4, [(0, 1, S), (0, 2, S), (1, 2, S), (0, 3, S), (1, 3, S)], name="bicyclobutane")


def hcn():
    return make(["H", "C", "N"], [(0, 1, S), (1, 2, T)], name="hcn")


def naphthalene_skeleton():
    bonds = [(0, 1, S), (1, 2, S), (2, 3, S), (3, 4, S), (4, 9, S), (9, 0, S),
             (4, 5, S), (5, 6, S), (6, 7, S), (7, 8, S), (8, 9, S)]
    return make(["C"] * 10, bonds, name="naphthalene skeleton")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
