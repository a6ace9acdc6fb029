"""GraphSAGE-style message passing that maps atom features to (e, s).

Each layer computes ``relu(h @ W_self + agg(h) @ W_nbr + b)`` where
``agg`` is the MEAN (or SUM) of neighbour embeddings.  A two-layer
perceptron then maps each final embedding to two numbers: the
electronegativity ``e`` and the hardness ``s``.  ``s`` gets a fixed
``hardness_offset`` (default 1.0) added so that a freshly initialised
model starts away from the singular point s = 0; the offset is a
constant of the architecture, not a trainable bias, and ``s`` remains
unconstrained in sign.

Weights file layout (little-endian, version ``WEIGHTS_FORMAT_VERSION``)::

    b"GQEQ-WEIGHTS <version>\\n"
    <one line of JSON: config, feature_layout_version, endianness,
     dtype, array names and shapes, payload byte count>\\n
    <float32 payload, arrays concatenated in header order, C order>
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

import numpy as np

from graphqeq.errors import InvalidArgument, ModelError, ModelMismatch, TruncationError, VersionError
from graphqeq.molio import Molecule
from graphqeq.perceive import FEATURE_LAYOUT_VERSION, FEATURE_WIDTH

WEIGHTS_MAGIC = b"GQEQ-WEIGHTS"
WEIGHTS_FORMAT_VERSION = 1
AGGREGATIONS = ("mean", "sum")
ACTIVATIONS = ("relu",)


@dataclass(frozen=True)
class ModelConfig:
    input_width: int = FEATURE_WIDTH
    hidden_width: int = 128
    n_layers: int = 4
    aggregation: str = "mean"
    activation: str = "relu"
    readout_hidden_width: int = 128
    hardness_offset: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("input_width", "hidden_width", "readout_hidden_width", "n_layers"):
            if int(getattr(self, name)) < 1:
                raise InvalidArgument(f"{name} must be >= 1")
        if self.aggregation not in AGGREGATIONS:
            raise InvalidArgument(f"aggregation must be one of {AGGREGATIONS}")
        if self.activation not in ACTIVATIONS:
            raise InvalidArgument(f"activation must be one of {ACTIVATIONS}")


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    shapes = {}
    width_in = config.input_width
    for k in range(config.n_layers):
        shapes[f"conv{k}.w_self"] = (width_in, config.hidden_width)
        shapes[f"conv{k}.w_nbr"] = (width_in, config.hidden_width)
        shapes[f"conv{k}.bias"] = (config.hidden_width,)
        width_in = config.hidden_width
    shapes["readout.w1"] = (config.hidden_width, config.readout_hidden_width)
    shapes["readout.b1"] = (config.readout_hidden_width,)
    shapes["readout.w2"] = (config.readout_hidden_width, 2)
    shapes["readout.b2"] = (2,)
    return shapes


def is_weight(name: str) -> bool:
    """True for weight matrices, False for bias vectors."""
    return ".w" in name


def _flush_subnormals(a: np.ndarray) -> np.ndarray:
    # weights of dead units decay geometrically under Adam + L2 and end up
    # subnormal, which makes BLAS many times slower for no numerical gain
    a[np.abs(a) < np.finfo(a.dtype).tiny] = 0
    return a


@dataclass(eq=False)
class ModelParams:
    config: ModelConfig
    arrays: dict[str, np.ndarray]
    feature_layout_version: int = FEATURE_LAYOUT_VERSION

    def __post_init__(self):
        expected = param_shapes(self.config)
        if list(self.arrays) != list(expected):
            raise ModelMismatch(f"parameter names {list(self.arrays)} do not match the config")
        for name, shape in expected.items():
            if self.arrays[name].shape != shape:
                raise ModelMismatch(f"{name} has shape {self.arrays[name].shape}, config wants {shape}")

    def __getitem__(self, name):
        return self.arrays[name]

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        return (
            self.config == other.config
            and self.feature_layout_version == other.feature_layout_version
            and list(self.arrays) == list(other.arrays)
            and all(
                a.dtype == b.dtype and a.tobytes() == b.tobytes()
                for a, b in zip(self.arrays.values(), other.arrays.values())
            )
        )

    @property
    def dtype(self):
        return next(iter(self.arrays.values())).dtype

    def astype(self, dtype) -> "ModelParams":
        arrays = {k: _flush_subnormals(np.array(v, dtype=dtype)) for k, v in self.arrays.items()}
        return ModelParams(self.config, arrays, self.feature_layout_version)

    def copy(self) -> "ModelParams":
        return self.astype(self.dtype)

    def n_parameters(self) -> int:
        return sum(v.size for v in self.arrays.values())


@dataclass(frozen=True)
class ENSParams:
    """Per-atom electronegativity ``e`` and hardness ``s``."""

    e: np.ndarray
    s: np.ndarray


def init_model(config: ModelConfig) -> ModelParams:
    """Glorot-uniform weights, U(-l, l) with l = sqrt(6 / (fan_in + fan_out)),
    so each weight has variance 2 / (fan_in + fan_out).  Biases are zero."""
    rng = np.random.default_rng(config.seed)
    arrays = {}
    for name, shape in param_shapes(config).items():
        if is_weight(name):
            limit = np.sqrt(6.0 / (shape[0] + shape[1]))
            arrays[name] = rng.uniform(-limit, limit, size=shape).astype(np.float32)
        else:
            arrays[name] = np.zeros(shape, dtype=np.float32)
    return ModelParams(config, arrays)


# ---------------------------------------------------------------------------
# graphs


class Adjacency:
    """Symmetric neighbour lists for O(atoms + bonds) aggregation.

    Neighbours are stored in CSR form and, for the sums, as a padded
    (n_nodes, max_degree) table whose empty slots point at an extra zero row.
    """

    def __init__(self, n_nodes: int, edges: np.ndarray):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.n_nodes = n_nodes
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.argsort(src, kind="stable")
        self.indices = dst[order]
        self.degree = np.bincount(src, minlength=n_nodes)
        self.indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(self.degree, out=self.indptr[1:])
        rows = src[order]
        slots = np.arange(len(rows)) - self.indptr[rows]
        self._table = np.full((n_nodes, int(self.degree.max(initial=0))), n_nodes, dtype=np.int64)
        self._table[rows, slots] = self.indices

    def neighbor_sum(self, h: np.ndarray) -> np.ndarray:
        # accumulate in float64: exact for a few float32 terms, so the result
        # does not depend on neighbour order (atom relabelling)
        padded = np.zeros((self.n_nodes + 1,) + h.shape[1:], dtype=np.float64)
        padded[: self.n_nodes] = h
        out = np.zeros((self.n_nodes,) + h.shape[1:], dtype=np.float64)
        for k in range(self._table.shape[1]):
            out += padded[self._table[:, k]]
        return out.astype(h.dtype, copy=False)

    def inverse_degree(self, dtype) -> np.ndarray:
        return (1.0 / np.maximum(self.degree, 1)).astype(dtype)[:, None]


@dataclass
class BatchedGraph:
    """Several molecules as one block-diagonal graph."""

    features: np.ndarray
    edges: np.ndarray
    segments: list[tuple[int, int]]
    net_charges: list[int]
    adjacency: Adjacency = field(init=False, repr=False)

    def __post_init__(self):
        self.adjacency = Adjacency(len(self.features), self.edges)

    @property
    def n_nodes(self) -> int:
        return len(self.features)


def batch(items: Sequence[tuple[Molecule, np.ndarray]]) -> BatchedGraph:
    """Concatenate (molecule, features) pairs; edge indices are offset per molecule."""
    if len(items) == 0:
        raise InvalidArgument("cannot batch an empty sequence")
    widths = {feats.shape[1] for _, feats in items}
    if len(widths) != 1:
        raise InvalidArgument(f"feature widths differ across molecules: {sorted(widths)}")
    segments, edges, feats, charges = [], [], [], []
    offset = 0
    for mol, x in items:
        if len(x) != mol.n_atoms:
            raise InvalidArgument(f"{len(x)} feature rows for {mol.n_atoms} atoms")
        segments.append((offset, offset + mol.n_atoms))
        edges.append(mol.edge_index() + offset)
        feats.append(x)
        charges.append(mol.net_charge)
        offset += mol.n_atoms
    return BatchedGraph(np.concatenate(feats), np.concatenate(edges), segments, charges)


def unbatch(bg: BatchedGraph, values) -> list:
    if len(values) != bg.n_nodes:
        raise InvalidArgument(f"{len(values)} values for {bg.n_nodes} nodes")
    return [values[start:end] for start, end in bg.segments]


# ---------------------------------------------------------------------------
# forward / backward


def _check_compatible(params: ModelParams, features: np.ndarray):
    if params.feature_layout_version != FEATURE_LAYOUT_VERSION:
        raise ModelMismatch(
            f"model expects feature layout v{params.feature_layout_version}, "
            f"featurizer produces v{FEATURE_LAYOUT_VERSION}"
        )
    if features.ndim != 2 or features.shape[1] != params.config.input_width:
        raise ModelMismatch(
            f"feature width {features.shape[-1]} does not match model input width {params.config.input_width}"
        )


def _resolve_graph(graph, features):
    if isinstance(graph, BatchedGraph):
        return graph.adjacency, graph.features if features is None else features
    if isinstance(graph, Molecule):
        if features is None:
            raise InvalidArgument("features are required when passing a Molecule")
        return Adjacency(graph.n_atoms, graph.edge_index()), features
    if isinstance(graph, Adjacency):
        return graph, features
    raise InvalidArgument(f"cannot run forward on {type(graph).__name__}")


def _aggregate(params, adj, h, inv_deg):
    summed = adj.neighbor_sum(h)
    return summed * inv_deg if params.config.aggregation == "mean" else summed


def _row_stable_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # BLAS treats tail rows of a skinny product differently, so a row's result
    # would depend on its position; a plain reduction keeps relabelling exact
    acc = np.float64 if a.dtype == np.float32 else a.dtype
    a, b = a.astype(acc, copy=False), b.astype(acc)
    out = np.empty((len(a), b.shape[1]), dtype=acc)
    for j in range(b.shape[1]):
        out[:, j] = (a * b[:, j]).sum(axis=1)
    return out


def forward_with_cache(params: ModelParams, graph, features=None):
    adj, x = _resolve_graph(graph, features)
    _check_compatible(params, x)
    dtype = params.dtype
    h = np.asarray(x, dtype=dtype)
    inv_deg = adj.inverse_degree(dtype)
    layers = []
    for k in range(params.config.n_layers):
        m = _aggregate(params, adj, h, inv_deg)
        z = h @ params[f"conv{k}.w_self"] + m @ params[f"conv{k}.w_nbr"] + params[f"conv{k}.bias"]
        layers.append((h, m, z > 0))
        h = np.maximum(z, 0)
    z1 = h @ params["readout.w1"] + params["readout.b1"]
    r = np.maximum(z1, 0)
    out = (_row_stable_matmul(r, params["readout.w2"]) + params["readout.b2"]).astype(dtype)
    e = out[:, 0]
    s = out[:, 1] + dtype.type(params.config.hardness_offset)
    cache = {"adj": adj, "inv_deg": inv_deg, "layers": layers, "h": h, "z1_pos": z1 > 0, "r": r}
    return ENSParams(e, s), cache


def forward(params: ModelParams, graph, features=None) -> ENSParams:
    """Per-atom (e, s) for a Molecule (with ``features``) or a BatchedGraph."""
    ens, _ = forward_with_cache(params, graph, features)
    return ens


def embed(params: ModelParams, graph, features=None) -> np.ndarray:
    """Final message-passing embeddings (before the readout)."""
    _, cache = forward_with_cache(params, graph, features)
    return cache["h"]


def backward(params: ModelParams, cache, grad_e: np.ndarray, grad_s: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar w.r.t. every parameter, given dL/de and dL/ds."""
    grads = {}
    dout = np.stack([grad_e, grad_s], axis=1).astype(params.dtype)
    r = cache["r"]
    grads["readout.w2"] = r.T @ dout
    grads["readout.b2"] = dout.sum(axis=0)
    dz1 = (dout @ params["readout.w2"].T) * cache["z1_pos"]
    grads["readout.w1"] = cache["h"].T @ dz1
    grads["readout.b1"] = dz1.sum(axis=0)
    dh = dz1 @ params["readout.w1"].T

    adj, inv_deg = cache["adj"], cache["inv_deg"]
    mean = params.config.aggregation == "mean"
    for k in reversed(range(params.config.n_layers)):
        h_in, m, pos = cache["layers"][k]
        dz = dh * pos
        grads[f"conv{k}.w_self"] = h_in.T @ dz
        grads[f"conv{k}.w_nbr"] = m.T @ dz
        grads[f"conv{k}.bias"] = dz.sum(axis=0)
        if k > 0:
            dm = dz @ params[f"conv{k}.w_nbr"].T
            if mean:
                dm = dm * inv_deg
            dh = dz @ params[f"conv{k}.w_self"].T + adj.neighbor_sum(dm)
    return {name: grads[name] for name in params.arrays}


# ---------------------------------------------------------------------------
# serialization


def save_model(params: ModelParams) -> bytes:
    arrays = {k: _flush_subnormals(np.array(v, dtype="<f4")) for k, v in params.arrays.items()}
    payload = b"".join(a.tobytes() for a in arrays.values())
    header = {
        "config": asdict(params.config),
        "feature_layout_version": params.feature_layout_version,
        "endianness": "little",
        "dtype": "float32",
        "arrays": [[name, list(a.shape)] for name, a in arrays.items()],
        "payload_bytes": len(payload),
    }
    head = WEIGHTS_MAGIC + b" %d\n" % WEIGHTS_FORMAT_VERSION
    return head + json.dumps(header, sort_keys=True).encode() + b"\n" + payload


def load_model(data: bytes) -> ModelParams:
    first, sep, rest = data.partition(b"\n")
    parts = first.split()
    if not sep or len(parts) != 2 or parts[0] != WEIGHTS_MAGIC:
        raise ModelError("not a graphqeq weights file")
    try:
        version = int(parts[1])
    except ValueError:
        raise VersionError(f"unreadable format version {parts[1]!r}") from None
    if version != WEIGHTS_FORMAT_VERSION:
        raise VersionError(f"weights format version {version} is not supported (expected {WEIGHTS_FORMAT_VERSION})")
    header_line, sep, payload = rest.partition(b"\n")
    if not sep:
        raise TruncationError("weights file ends inside the header")
    try:
        header = json.loads(header_line)
    except json.JSONDecodeError as exc:
        raise ModelError(f"corrupt weights header: {exc}") from None
    if header.get("endianness") != "little" or header.get("dtype") != "float32":
        raise ModelError("weights payload must be little-endian float32")
    if len(payload) < header["payload_bytes"]:
        raise TruncationError(f"payload has {len(payload)} bytes, header promises {header['payload_bytes']}")
    if len(payload) > header["payload_bytes"]:
        raise ModelError("trailing bytes after weights payload")
    config = ModelConfig(**header["config"])
    arrays = {}
    offset = 0
    for name, shape in header["arrays"]:
        count = int(np.prod(shape, dtype=np.int64))
        arrays[name] = np.frombuffer(payload, dtype="<f4", count=count, offset=offset).reshape(shape).astype(np.float32)
        _flush_subnormals(arrays[name])
        offset += 4 * count
    return ModelParams(config, arrays, int(header["feature_layout_version"]))
