"""Fitting model weights to reference charges through the full GNN -> QEq pipeline.

The loss is the per-atom mean squared charge error plus ``l2_rate`` times
the sum of squared weight-matrix entries (biases are not penalised).
Gradients are computed by hand: the closed-form QEq Jacobian pulls dL/dq
back to dL/de and dL/ds, and :func:`graphqeq.gnn.backward` does the rest.
Training runs in float64; the returned weights are float32.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from graphqeq import gnn, qeq
from graphqeq.errors import InvalidArgument, SingularHardness
from graphqeq.gnn import BatchedGraph, ModelConfig, ModelParams, is_weight
from graphqeq.molio import AtomRecord, BondKind, Molecule, n_components
from graphqeq.perceive import featurize

REFERENCE_SUM_TOL = 1e-4


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    l2_rate: float = 1e-4
    batch_size: int = 512
    epochs: int = 100
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    split: tuple[float, float, float] = (0.8, 0.1, 0.1)

    def __post_init__(self):
        if self.learning_rate <= 0 or self.l2_rate < 0:
            raise InvalidArgument("learning_rate must be > 0 and l2_rate >= 0")
        if self.batch_size < 1 or self.epochs < 0:
            raise InvalidArgument("batch_size must be >= 1 and epochs >= 0")
        if len(self.split) != 3 or min(self.split) < 0 or abs(sum(self.split) - 1.0) > 1e-9:
            raise InvalidArgument(f"split fractions must be non-negative and sum to 1, got {self.split}")


@dataclass(frozen=True)
class LabeledMolecule:
    molecule: Molecule
    charges: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.charges, dtype=np.float64).ravel()
        if len(q) != self.molecule.n_atoms:
            raise InvalidArgument(f"{len(q)} reference charges for {self.molecule.n_atoms} atoms")
        if abs(math.fsum(q) - self.molecule.net_charge) > REFERENCE_SUM_TOL:
            raise InvalidArgument(
                f"reference charges of {self.molecule.name!r} sum to {math.fsum(q):.6f}, "
                f"net charge is {self.molecule.net_charge}"
            )
        object.__setattr__(self, "charges", q)


@dataclass
class LabeledBatch:
    graph: BatchedGraph
    reference: np.ndarray


def make_batch(samples: Sequence[LabeledMolecule], dtype=np.float64) -> LabeledBatch:
    items = [(s.molecule, featurize(s.molecule, dtype=dtype)) for s in samples]
    return LabeledBatch(gnn.batch(items), np.concatenate([s.charges for s in samples]))


class _Prepared:
    """Per-molecule features and offsets computed once, concatenated per mini-batch."""

    def __init__(self, samples: Sequence[LabeledMolecule], dtype):
        self.features = [featurize(s.molecule, dtype=dtype) for s in samples]
        self.edges = [s.molecule.edge_index() for s in samples]
        self.charges = [s.molecule.net_charge for s in samples]
        self.reference = [s.charges for s in samples]

    def batch(self, idx: Sequence[int]) -> LabeledBatch:
        segments, edges = [], []
        offset = 0
        for i in idx:
            n = len(self.features[i])
            segments.append((offset, offset + n))
            edges.append(self.edges[i] + offset)
            offset += n
        graph = BatchedGraph(
            np.concatenate([self.features[i] for i in idx]),
            np.concatenate(edges),
            segments,
            [self.charges[i] for i in idx],
        )
        return LabeledBatch(graph, np.concatenate([self.reference[i] for i in idx]))


def l2_penalty(params: ModelParams) -> float:
    return math.fsum(float(np.sum(np.square(v, dtype=np.float64))) for k, v in params.arrays.items() if is_weight(k))


def predict(params: ModelParams, graph: BatchedGraph) -> np.ndarray:
    ens = gnn.forward(params, graph)
    results = qeq.solve_segments(ens.e, ens.s, graph.net_charges, graph.segments)
    return np.concatenate([r.charges for r in results])


def data_loss(params: ModelParams, batch: LabeledBatch) -> float:
    residual = predict(params, batch.graph) - batch.reference
    return float(np.mean(residual**2))


def loss(params: ModelParams, batch: LabeledBatch, l2_rate: float = TrainConfig.l2_rate) -> float:
    return data_loss(params, batch) + l2_rate * l2_penalty(params)


def backward(
    params: ModelParams, batch: LabeledBatch, l2_rate: float = TrainConfig.l2_rate
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss value and its gradient w.r.t. every parameter array."""
    graph = batch.graph
    ens, cache = gnn.forward_with_cache(params, graph)
    e = np.asarray(ens.e, dtype=np.float64)
    s = np.asarray(ens.s, dtype=np.float64)
    results = qeq.solve_segments(e, s, graph.net_charges, graph.segments)
    predicted = np.concatenate([r.charges for r in results])
    residual = predicted - batch.reference
    n_atoms = len(residual)
    grad_q = 2.0 * residual / n_atoms

    grad_e = np.zeros(n_atoms)
    grad_s = np.zeros(n_atoms)
    for (start, end), result in zip(graph.segments, results):
        ge, gs = qeq.solve_vjp(e[start:end], s[start:end], result.charges, grad_q[start:end])
        grad_e[start:end] = ge
        grad_s[start:end] = gs

    grads = gnn.backward(params, cache, grad_e, grad_s)
    for name, value in params.arrays.items():
        if is_weight(name):
            grads[name] = grads[name] + 2.0 * l2_rate * value
    value = float(np.mean(residual**2)) + l2_rate * l2_penalty(params)
    return value, grads


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "AdamState":
        return cls(
            {k: np.zeros_like(a) for k, a in params.arrays.items()},
            {k: np.zeros_like(a) for k, a in params.arrays.items()},
        )


def adam_step(
    params: ModelParams, grads: dict[str, np.ndarray], state: AdamState, config: TrainConfig
) -> tuple[ModelParams, AdamState]:
    step = state.step + 1
    b1, b2 = config.beta1, config.beta2
    c1, c2 = 1.0 - b1**step, 1.0 - b2**step
    arrays, m_new, v_new = {}, {}, {}
    for name, p in params.arrays.items():
        g = grads[name]
        m = b1 * state.m[name] + (1.0 - b1) * g
        v = b2 * state.v[name] + (1.0 - b2) * g * g
        arrays[name] = p - config.learning_rate * (m / c1) / (np.sqrt(v / c2) + config.eps)
        m_new[name], v_new[name] = m, v
    return ModelParams(params.config, arrays, params.feature_layout_version), AdamState(m_new, v_new, step)


# ---------------------------------------------------------------------------
# training loop


@dataclass
class HistoryRow:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class TrainResult:
    params: ModelParams
    history: list[HistoryRow]
    best_epoch: int | None
    train_indices: np.ndarray
    val_indices: np.ndarray
    test_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def history_csv(self) -> str:
        rows = ["epoch,train_loss,val_loss"]
        rows += [f"{h.epoch},{h.train_loss:.10g},{h.val_loss:.10g}" for h in self.history]
        return "\n".join(rows) + "\n"


def split_indices(n: int, fractions, rng) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    order = rng.permutation(n)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    n_val = min(n_val, n - n_train)
    return order[:n_train], order[n_train : n_train + n_val], order[n_train + n_val :]


def train_loop(
    dataset: Sequence[LabeledMolecule],
    model_config: ModelConfig,
    train_config: TrainConfig = TrainConfig(),
    initial_params: ModelParams | None = None,
) -> TrainResult:
    """Mini-batch Adam; returns the epoch with the lowest validation loss."""
    if len(dataset) == 0:
        raise InvalidArgument("dataset is empty")
    rng = np.random.default_rng(train_config.seed)
    train_idx, val_idx, test_idx = split_indices(len(dataset), train_config.split, rng)
    if len(train_idx) == 0 or len(val_idx) == 0:
        raise InvalidArgument(
            f"split {train_config.split} of {len(dataset)} molecules leaves an empty training or validation set"
        )
    start = initial_params if initial_params is not None else gnn.init_model(model_config)
    if train_config.epochs == 0:
        return TrainResult(start.astype(np.float32), [], None, train_idx, val_idx, test_idx)

    prepared = _Prepared(dataset, np.float64)
    train_eval = prepared.batch(train_idx)
    val_eval = prepared.batch(val_idx)
    batch_size = min(train_config.batch_size, len(train_idx))

    params = start.astype(np.float64)
    state = AdamState.zeros_like(params)
    best, best_val, best_epoch = params, math.inf, None
    history = []
    for epoch in range(1, train_config.epochs + 1):
        order = rng.permutation(train_idx)
        for lo in range(0, len(order), batch_size):
            _, grads = backward(params, prepared.batch(order[lo : lo + batch_size]), train_config.l2_rate)
            params, state = adam_step(params, grads, state, train_config)
        train_loss = loss(params, train_eval, train_config.l2_rate)
        val_loss = loss(params, val_eval, train_config.l2_rate)
        history.append(HistoryRow(epoch, train_loss, val_loss))
        if val_loss < best_val:
            best, best_val, best_epoch = params, val_loss, epoch
    return TrainResult(best.astype(np.float32), history, best_epoch, train_idx, val_idx, test_idx)


# ---------------------------------------------------------------------------
# synthetic teacher-student data

# (electronegativity, hardness) per element for the table teacher; synthetic
# values with Pauling-like ordering, not fitted to any reference charges
TEACHER_TABLE = {
    "H": (2.20, 8.0), "Li": (0.98, 4.0), "C": (2.55, 7.0), "N": (3.04, 7.5),
    "O": (3.44, 8.0), "F": (3.98, 9.0), "Na": (0.93, 4.0), "Mg": (1.31, 5.0),
    "P": (2.19, 6.0), "S": (2.58, 6.0), "Cl": (3.16, 7.0), "K": (0.82, 3.5),
    "Ca": (1.00, 4.5), "Br": (2.96, 6.5), "I": (2.66, 6.0),
}

_HEAVY = ("C", "N", "O", "S", "P", "F", "Cl", "Br", "I")
_HEAVY_WEIGHTS = np.array([0.55, 0.12, 0.15, 0.04, 0.02, 0.04, 0.04, 0.02, 0.02])
_VALENCE = {"C": 4, "N": 3, "O": 2, "S": 2, "P": 3, "F": 1, "Cl": 1, "Br": 1, "I": 1}
_MIN_ATOMS, _MAX_ATOMS = 3, 30


def _graph_distance(adj, source, target, limit):
    frontier, seen = [source], {source}
    for depth in range(1, limit + 1):
        nxt = []
        for v in frontier:
            for w in adj[v]:
                if w == target:
                    return depth
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return None


def random_molecule(rng: np.random.Generator, name: str = "") -> Molecule:
    """Random valence-respecting molecule of 3..30 atoms with net charge in -2..2.

    A random heavy-atom tree, optionally one ring closure (ring size 3..8)
    and one double bond, then ±1 formal charges on N/O/C with hydrogens
    adjusted, then hydrogen fill.
    """
    while True:
        n_heavy = int(rng.integers(1, 11))
        elements = [str(rng.choice(("C", "N", "O", "S", "P"), p=[0.7, 0.12, 0.12, 0.04, 0.02]))]
        bonds = []
        free = [_VALENCE[elements[0]]]
        adj = [[]]
        for _ in range(n_heavy - 1):
            open_atoms = [i for i, f in enumerate(free) if f > 0]
            if not open_atoms:
                break
            el = str(rng.choice(_HEAVY, p=_HEAVY_WEIGHTS))
            if len(open_atoms) == 1 and free[open_atoms[0]] == 1 and _VALENCE[el] == 1:
                el = "C"
            parent = int(rng.choice(open_atoms))
            elements.append(el)
            free.append(_VALENCE[el] - 1)
            free[parent] -= 1
            adj.append([parent])
            adj[parent].append(len(elements) - 1)
            bonds.append([parent, len(elements) - 1, BondKind.SINGLE])

        n = len(elements)
        if n >= 3 and rng.random() < 0.35:
            candidates = [i for i in range(n) if free[i] > 0]
            if len(candidates) >= 2:
                a, b = (int(v) for v in rng.choice(candidates, size=2, replace=False))
                dist = _graph_distance(adj, a, b, 7)
                if dist is not None and dist >= 2:
                    bonds.append([a, b, BondKind.SINGLE])
                    adj[a].append(b)
                    adj[b].append(a)
                    free[a] -= 1
                    free[b] -= 1
        if bonds and rng.random() < 0.35:
            k = int(rng.integers(len(bonds)))
            a, b, _ = bonds[k]
            if free[a] > 0 and free[b] > 0 and elements[a] in "CNOS" and elements[b] in "CNOS":
                bonds[k][2] = BondKind.DOUBLE
                free[a] -= 1
                free[b] -= 1

        formal = [0] * n
        target = int(rng.integers(-2, 3))
        order = [int(i) for i in rng.permutation(n)]
        for i in order:
            if target > 0 and elements[i] == "N":
                formal[i], free[i] = 1, free[i] + 1
                target -= 1
            elif target < 0 and elements[i] in ("O", "C") and free[i] > 0:
                formal[i], free[i] = -1, free[i] - 1
                target += 1
        for i in order:
            if target > 0 and elements[i] == "C" and free[i] > 0 and formal[i] == 0:
                formal[i], free[i] = 1, free[i] - 1
                target -= 1

        atoms = [AtomRecord(el, fc) for el, fc in zip(elements, formal)]
        for i in range(n):
            for _ in range(free[i]):
                bonds.append([i, len(atoms), BondKind.SINGLE])
                atoms.append(AtomRecord("H"))
        if _MIN_ATOMS <= len(atoms) <= _MAX_ATOMS and n_components(len(atoms), bonds) == 1:
            return Molecule(atoms=atoms, bonds=[tuple(b) for b in bonds], name=name)


def table_teacher(mol: Molecule) -> np.ndarray:
    e = np.array([TEACHER_TABLE[a.element][0] for a in mol.atoms])
    s = np.array([TEACHER_TABLE[a.element][1] for a in mol.atoms])
    return qeq.solve(qeq.QeqProblem(e, s, mol.net_charge)).charges


def make_teacher_dataset(
    n_molecules: int,
    seed: int = 0,
    teacher: str = "table",
    teacher_params: ModelParams | None = None,
) -> list[LabeledMolecule]:
    """Random molecules labelled by a frozen teacher.

    ``teacher="table"`` uses :data:`TEACHER_TABLE`; ``teacher="model"`` runs
    ``teacher_params`` (default: a seeded 2-layer, width-32 random model)
    through GNN -> QEq and redraws any molecule where the teacher is singular.
    """
    if n_molecules < 1:
        raise InvalidArgument("n_molecules must be >= 1")
    if teacher not in ("table", "model"):
        raise InvalidArgument(f"unknown teacher {teacher!r}")
    rng = np.random.default_rng(seed)
    if teacher == "model" and teacher_params is None:
        teacher_params = gnn.init_model(
            ModelConfig(hidden_width=32, n_layers=2, readout_hidden_width=32, seed=seed + 1)
        )
    out = []
    while len(out) < n_molecules:
        mol = random_molecule(rng, name=f"teacher_{len(out)}")
        if teacher == "table":
            charges = table_teacher(mol)
        else:
            params64 = teacher_params.astype(np.float64)
            ens = gnn.forward(params64, mol, featurize(mol, dtype=np.float64))
            if np.min(np.abs(ens.s)) < 0.1:
                continue
            try:
                charges = qeq.solve(qeq.QeqProblem(ens.e, ens.s, mol.net_charge)).charges
            except SingularHardness:
                continue
        out.append(LabeledMolecule(mol, charges))
    return out
