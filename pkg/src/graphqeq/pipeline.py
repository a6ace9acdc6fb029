"""Featurize -> message passing -> charge equilibration, for one or many molecules."""

from __future__ import annotations

import functools
from collections.abc import Sequence
from importlib import resources

from graphqeq import gnn, qeq
from graphqeq.gnn import ModelParams
from graphqeq.molio import ChargeResult, Molecule
from graphqeq.perceive import featurize

DEFAULT_MODEL_RESOURCE = "default_model.bin"


@functools.lru_cache(maxsize=1)
def default_model() -> ModelParams:
    """The bundled weights shipped in ``graphqeq/data``."""
    data = resources.files("graphqeq").joinpath("data", DEFAULT_MODEL_RESOURCE).read_bytes()
    return gnn.load_model(data)


def load_model_file(path) -> ModelParams:
    with open(path, "rb") as fh:
        return gnn.load_model(fh.read())


def charge_molecule(mol: Molecule, params: ModelParams | None = None) -> ChargeResult:
    params = params or default_model()
    x = featurize(mol, dtype=params.dtype)
    ens = gnn.forward(params, mol, x)
    return qeq.solve(qeq.QeqProblem(ens.e, ens.s, mol.net_charge))


def charge_batch(mols: Sequence[Molecule], params: ModelParams | None = None) -> list[ChargeResult]:
    """One block-diagonal forward pass over all molecules, then per-molecule QEq."""
    params = params or default_model()
    bg = gnn.batch([(mol, featurize(mol, dtype=params.dtype)) for mol in mols])
    ens = gnn.forward(params, bg)
    return qeq.solve_segments(ens.e, ens.s, bg.net_charges, bg.segments)


def charge(molecules, params: ModelParams | None = None):
    """Charges for a Molecule (returns a ChargeResult) or a sequence of them (returns a list)."""
    if isinstance(molecules, Molecule):
        return charge_molecule(molecules, params)
    return charge_batch(list(molecules), params)
