import numpy as np

from conftest import FIXTURES, benzene, methane
from graphqeq import charge, default_model, molio
from graphqeq.gnn import ModelConfig
from graphqeq.molio import ChargeResult


def test_bundled_model_architecture():
    params = default_model()
    assert params.config == ModelConfig(seed=params.config.seed)
    assert params.dtype == np.float32
    assert not any(np.any((a != 0) & (np.abs(a) < np.finfo(np.float32).tiny)) for a in params.arrays.values())


def test_charge_single_and_sequence():
    result = charge(methane())
    assert isinstance(result, ChargeResult) and len(result) == 5
    results = charge([methane(), benzene()])
    assert [len(r) for r in results] == [5, 12]
    assert np.array_equal(results[0].charges, result.charges)


def test_bundled_model_chemistry_sanity():
    # hydroxyl oxygen negative, its hydrogen positive; methane hydrogens equal
    ethanol = molio.read_molecule_file(FIXTURES / "ethanol.sdf")
    q = charge(ethanol).charges
    assert q[2] < 0 and q[8] > 0
    assert np.ptp(charge(methane()).charges[1:]) == 0


def test_fixture_charges_conserve(tmp_path):
    for path in sorted(FIXTURES.glob("random_*")):
        mol = molio.read_molecule_file(path)
        assert abs(charge(mol).residual) <= 1e-9
