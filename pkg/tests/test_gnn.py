import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import benzene, methane
from graphqeq import gnn
from graphqeq.errors import InvalidArgument, ModelError, ModelMismatch, TruncationError, VersionError
from graphqeq.gnn import Adjacency, ModelConfig, ModelParams, batch, forward, init_model, load_model, save_model, unbatch
from graphqeq.molio import generate_chain
from graphqeq.perceive import featurize
from graphqeq.qeq import QeqProblem, solve
from graphqeq.train import random_molecule

SMALL = ModelConfig(hidden_width=16, n_layers=3, readout_hidden_width=16, seed=3)


def test_init_deterministic():
    assert init_model(SMALL) == init_model(SMALL)
    assert not init_model(SMALL) == init_model(ModelConfig(hidden_width=16, n_layers=3, readout_hidden_width=16, seed=4))


def test_init_biases_zero_and_dtype():
    params = init_model(SMALL)
    for name, arr in params.arrays.items():
        assert arr.dtype == np.float32
        if not gnn.is_weight(name):
            assert not arr.any()


def test_glorot_variance():
    w = init_model(ModelConfig())["conv1.w_self"]
    assert w.shape == (128, 128)
    # Glorot variance is 2 / (fan_in + fan_out) = 1/128
    assert abs(w.var() - 1 / 128) <= 0.2 / 128
    assert np.abs(w).max() <= np.sqrt(6 / 256)


def test_parameter_count():
    p = init_model(ModelConfig())
    expected = 2 * 26 * 128 + 128 + 3 * (2 * 128 * 128 + 128) + 128 * 128 + 128 + 128 * 2 + 2
    assert p.n_parameters() == expected


def test_config_validation():
    with pytest.raises(InvalidArgument):
        ModelConfig(aggregation="max")
    with pytest.raises(InvalidArgument):
        ModelConfig(n_layers=0)


def hand_params():
    config = ModelConfig(input_width=2, hidden_width=2, n_layers=1, readout_hidden_width=2)
    eye = np.eye(2, dtype=np.float64)
    arrays = {
        "conv0.w_self": eye,
        "conv0.w_nbr": 2 * eye,
        "conv0.bias": np.zeros(2),
        "readout.w1": eye,
        "readout.b1": np.array([0.0, -1.5]),
        "readout.w2": np.array([[1.0, 0.0], [0.0, 2.0]]),
        "readout.b2": np.zeros(2),
    }
    return ModelParams(config, arrays)


def test_two_node_hand_example():
    # h = relu(x + 2 x_nbr) = [[1, 2], [2, 1]]; r = relu(h + [0, -1.5]) = [[1, .5], [2, 0]]
    # out = r @ diag(1, 2) = [[1, 1], [2, 0]]; e = (1, 2), s = out[:, 1] + 1 = (2, 1)
    adj = Adjacency(2, np.array([[0, 1]]))
    ens = forward(hand_params(), adj, np.eye(2))
    assert ens.e.tolist() == [1.0, 2.0]
    assert ens.s.tolist() == [2.0, 1.0]
    # lambda = (0 + 1/2 + 2) / (1/2 + 1) = 5/3
    q = solve(QeqProblem(ens.e, ens.s, 0)).charges
    assert np.allclose(q, [1 / 3, -1 / 3], atol=1e-15)


def test_sum_aggregation_hand_example():
    params = hand_params()
    params = ModelParams(ModelConfig(**{**params.config.__dict__, "aggregation": "sum"}), params.arrays)
    # star: centre 0 sees two neighbours, so sum and mean differ there only
    adj = Adjacency(3, np.array([[0, 1], [0, 2]]))
    x = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    ens = forward(params, adj, x)
    # centre: h = [1, 0] + 2 [0, 2] = [1, 4]; r = [1, 2.5]; out = [1, 5]
    assert ens.e[0] == 1.0 and ens.s[0] == 6.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permutation_equivariance(seed):
    rng = np.random.default_rng(seed)
    params = init_model(SMALL)
    mol = random_molecule(rng)
    order = rng.permutation(mol.n_atoms)
    perm = mol.permuted(order)
    a = forward(params, mol, featurize(mol))
    b = forward(params, perm, featurize(perm))
    assert np.array_equal(b.e, a.e[order]) and np.array_equal(b.s, a.s[order])


def test_locality():
    # with n_layers = 3, atoms more than 3 bonds from a changed atom keep their output
    params = init_model(SMALL)
    chain = generate_chain(8, "alkane")
    x = featurize(chain)
    y = x.copy()
    y[0] = 0
    y[0, 4] = 1  # pretend carbon 0 is an oxygen
    a, b = forward(params, chain, x), forward(params, chain, y)
    # carbons form the backbone 0-1-...-7 in generate_chain
    assert np.array_equal(a.e[4:8], b.e[4:8])
    assert not np.array_equal(a.e[:3], b.e[:3])


def test_batch_matches_single():
    params = init_model(SMALL).astype(np.float64)
    mols = [methane(), benzene(), generate_chain(5, "pseudo_peptide")]
    bg = batch([(m, featurize(m, np.float64)) for m in mols])
    ens = forward(params, bg)
    for mol, e, s in zip(mols, unbatch(bg, ens.e), unbatch(bg, ens.s)):
        single = forward(params, mol, featurize(mol, np.float64))
        assert np.allclose(e, single.e, atol=1e-12) and np.allclose(s, single.s, atol=1e-12)
    assert bg.net_charges == [0, 0, 0]
    assert bg.segments[1] == (5, 17)


def test_batch_errors():
    with pytest.raises(InvalidArgument):
        batch([])
    bg = batch([(methane(), featurize(methane()))])
    with pytest.raises(InvalidArgument):
        unbatch(bg, np.zeros(3))


def test_isolated_atoms_in_adjacency():
    adj = Adjacency(4, np.array([[0, 1]]))
    h = np.arange(8, dtype=np.float64).reshape(4, 2)
    assert adj.neighbor_sum(h).tolist() == [[2, 3], [0, 1], [0, 0], [0, 0]]


def test_neighbor_sum_against_dense():
    rng = np.random.default_rng(1)
    mol = random_molecule(rng)
    adj = Adjacency(mol.n_atoms, mol.edge_index())
    dense = np.zeros((mol.n_atoms, mol.n_atoms))
    for a, b, _ in mol.bonds:
        dense[a, b] = dense[b, a] = 1
    h = rng.normal(size=(mol.n_atoms, 5))
    assert np.allclose(adj.neighbor_sum(h), dense @ h)


def test_save_load_round_trip():
    params = init_model(SMALL)
    data = save_model(params)
    assert data.startswith(b"GQEQ-WEIGHTS 1\n")
    assert load_model(data) == params
    assert save_model(load_model(data)) == data


def test_load_version_error():
    data = save_model(init_model(SMALL)).replace(b"GQEQ-WEIGHTS 1", b"GQEQ-WEIGHTS 2", 1)
    with pytest.raises(VersionError):
        load_model(data)


def test_load_truncated():
    data = save_model(init_model(SMALL))
    with pytest.raises(TruncationError):
        load_model(data[:-4])
    with pytest.raises(ModelError):
        load_model(data + b"\0")
    with pytest.raises(ModelError):
        load_model(b"not a model")


def test_feature_width_mismatch():
    params = init_model(ModelConfig(input_width=20, hidden_width=8, n_layers=1, readout_hidden_width=8))
    with pytest.raises(ModelMismatch):
        forward(params, methane(), featurize(methane()))


def test_layout_version_mismatch():
    params = init_model(SMALL)
    old = ModelParams(params.config, params.arrays, feature_layout_version=0)
    with pytest.raises(ModelMismatch):
        forward(old, methane(), featurize(methane()))


def test_wrong_shapes_rejected():
    params = init_model(SMALL)
    arrays = dict(params.arrays)
    arrays["readout.b2"] = np.zeros(3, dtype=np.float32)
    with pytest.raises(ModelMismatch):
        ModelParams(SMALL, arrays)


def test_singleton_batch_identical():
    params = init_model(SMALL)
    mol = benzene()
    x = featurize(mol)
    single = forward(params, mol, x)
    bg = batch([(mol, x)])
    batched = forward(params, bg)
    assert np.array_equal(single.e, batched.e) and np.array_equal(single.s, batched.s)
    assert [v.tolist() for v in unbatch(bg, batched.e)] == [single.e.tolist()]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 2**32 - 1), min_size=1, max_size=6))
def test_unbatch_inverts_batch(seeds):
    mols = [random_molecule(np.random.default_rng(s)) for s in seeds]
    bg = batch([(m, featurize(m)) for m in mols])
    values = np.arange(bg.n_nodes)
    parts = unbatch(bg, values)
    assert [len(p) for p in parts] == [m.n_atoms for m in mols]
    assert np.array_equal(np.concatenate(parts), values)
    assert [np.array_equal(x, featurize(m)) for x, m in zip(unbatch(bg, bg.features), mols)] == [True] * len(mols)


def test_batched_pipeline_matches_single_on_random_chains():
    from graphqeq.pipeline import charge_batch, charge_molecule

    rng = np.random.default_rng(20)
    kinds = ["alkane", "pseudo_peptide"]
    mols = [generate_chain(int(rng.integers(1, 40)), kinds[k % 2]) for k in range(20)]
    for b, mol in zip(charge_batch(mols), mols):
        assert np.abs(b.charges - charge_molecule(mol).charges).max() <= 1e-6


def test_subnormal_weights_flushed():
    params = init_model(SMALL).astype(np.float64)
    params.arrays["readout.w1"][0, 0] = 1e-42
    assert params.astype(np.float32)["readout.w1"][0, 0] == 0
    assert load_model(save_model(params))["readout.w1"][0, 0] == 0
