"""Value-to-go regressor: a small fully connected network trained with Adam.

The input is the flattened m x n binary assignment matrix (entry (i, j) is
1 when element j is labeled alternative i) plus one scalar carrying the
assignment's current value. Three ReLU hidden layers of width m*n + 1
feed an affine scalar output. Both the value feature and the regression
target are standardized by training-set statistics; the constants live in
the model so inference can undo them.

Training minimizes mean squared error on the standardized targets.
Everything is plain float64 numpy; gradients are exact backprop with the
ReLU subgradient at zero taken as zero.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import PartialAssignment, UNASSIGNED, ValueTable, value_of

_MODEL_MAGIC = b"UCAM"
_MODEL_VERSION = 1
_MODEL_HEADER = struct.Struct("<4sBII")
_NORM_STRUCT = struct.Struct("<dddd")
_LAYER_HEADER = struct.Struct("<II")

HIDDEN_LAYERS = 3


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    batch_size: int
    epochs: int
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("Adam betas must lie in (0, 1)")


@dataclass
class MlpModel:
    """Weights/biases per layer plus the standardization constants.

    weights[k] has shape (out, in); biases[k] has shape (out,). The
    canonical architecture built by init_model is three hidden layers of
    width m*n + 1 and a scalar output, but forward() accepts any
    shape-consistent stack (handy for hand-built fixtures).
    """

    n: int
    m: int
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    value_norm: tuple[float, float] = (0.0, 1.0)
    target_norm: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("weights and biases must be nonempty and aligned")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise ValueError(f"layer {k} has inconsistent shapes")
            if k > 0 and W.shape[1] != self.weights[k - 1].shape[0]:
                raise ValueError(f"layer {k} input width does not match layer {k - 1}")
            if not (np.isfinite(W).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {k} contains non-finite parameters")
        if self.weights[-1].shape[0] != 1:
            raise ValueError("output layer must be scalar")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    def save(self, path: str | Path) -> None:
        """Write the UCAM binary format: header, the four norm constants,
        then per layer u32 rows, u32 cols, row-major f64 weights, f64 biases."""
        with open(path, "wb") as fh:
            fh.write(_MODEL_HEADER.pack(_MODEL_MAGIC, _MODEL_VERSION, self.n, self.m))
            fh.write(_NORM_STRUCT.pack(*self.value_norm, *self.target_norm))
            for W, b in zip(self.weights, self.biases):
                fh.write(_LAYER_HEADER.pack(W.shape[0], W.shape[1]))
                fh.write(W.astype("<f8", copy=False).tobytes())
                fh.write(b.astype("<f8", copy=False).tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "MlpModel":
        data = Path(path).read_bytes()
        if len(data) < _MODEL_HEADER.size + _NORM_STRUCT.size:
            raise ValueError(f"{path}: truncated model file")
        magic, version, n, m = _MODEL_HEADER.unpack_from(data)
        if magic != _MODEL_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {_MODEL_MAGIC!r}")
        if version != _MODEL_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        vmean, vstd, tmean, tstd = _NORM_STRUCT.unpack_from(data, _MODEL_HEADER.size)
        offset = _MODEL_HEADER.size + _NORM_STRUCT.size
        weights, biases = [], []
        while offset < len(data):
            if offset + _LAYER_HEADER.size > len(data):
                raise ValueError(f"{path}: truncated layer header")
            rows, cols = _LAYER_HEADER.unpack_from(data, offset)
            offset += _LAYER_HEADER.size
            need = (rows * cols + rows) * 8
            if offset + need > len(data):
                raise ValueError(f"{path}: truncated layer payload")
            W = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=offset).reshape(rows, cols)
            offset += rows * cols * 8
            b = np.frombuffer(data, dtype="<f8", count=rows, offset=offset)
            offset += rows * 8
            weights.append(W.copy())
            biases.append(b.copy())
        return cls(n, m, weights, biases, (vmean, vstd), (tmean, tstd))


def init_model(n: int, m: int, rng: np.random.Generator) -> MlpModel:
    """Canonical architecture with He-initialized weights and zero biases."""
    width = m * n + 1
    dims = [width] * (HIDDEN_LAYERS + 1) + [1]
    weights, biases = [], []
    for fan_out, fan_in in zip(dims[1:], dims[:-1]):
        weights.append(rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    return MlpModel(n, m, weights, biases)


def standardize(x: float, norm: tuple[float, float]) -> float:
    return (x - norm[0]) / norm[1]


def destandardize(x: float, norm: tuple[float, float]) -> float:
    return x * norm[1] + norm[0]


def encode_input(
    assignment: PartialAssignment,
    current_value: float,
    m: int,
    value_norm: tuple[float, float] = (0.0, 1.0),
) -> np.ndarray:
    """Flattened binary assignment matrix plus the standardized value scalar."""
    n = assignment.n
    vec = np.zeros(m * n + 1)
    for j, lab in enumerate(assignment.labels):
        if lab == UNASSIGNED:
            continue
        if lab >= m:
            raise ValueError(f"label {lab} at element {j} exceeds m={m}")
        vec[lab * n + j] = 1.0
    vec[m * n] = standardize(current_value, value_norm)
    return vec


def decode_labels(vec: np.ndarray, n: int, m: int) -> tuple[int, ...]:
    """Invert the matrix part of encode_input back to per-element labels."""
    matrix = np.asarray(vec[: m * n]).reshape(m, n)
    labels = []
    for j in range(n):
        hits = np.flatnonzero(matrix[:, j] == 1.0)
        if hits.size > 1:
            raise ValueError(f"element {j} is marked for {hits.size} alternatives")
        labels.append(int(hits[0]) if hits.size else UNASSIGNED)
    return tuple(labels)


def _forward_std(model: MlpModel, X: np.ndarray):
    """Activations and the standardized scalar output for a (B, d) batch."""
    acts = [X]
    zs = []
    a = X
    for W, b in zip(model.weights[:-1], model.biases[:-1]):
        z = a @ W.T + b
        zs.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
    out = a @ model.weights[-1].T + model.biases[-1]
    return acts, zs, out[:, 0]


def forward(model: MlpModel, x) -> float | np.ndarray:
    """Network prediction, de-standardized by the target norm.

    Accepts a single input vector or a (B, d) batch.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    X = arr[None, :] if single else arr
    if X.shape[1] != model.input_dim:
        raise ValueError(f"input length {X.shape[1]} does not match model width {model.input_dim}")
    _, _, out = _forward_std(model, X)
    preds = out * model.target_norm[1] + model.target_norm[0]
    return float(preds[0]) if single else preds


def _encode_batch(model: MlpModel, pairs) -> tuple[np.ndarray, np.ndarray]:
    X = np.empty((len(pairs), model.input_dim))
    y = np.empty(len(pairs))
    for r, pair in enumerate(pairs):
        X[r] = encode_input(pair.assignment, pair.current_value, model.m, model.value_norm)
        y[r] = standardize(pair.target, model.target_norm)
    return X, y


def _loss_arrays(model: MlpModel, X: np.ndarray, y: np.ndarray) -> float:
    _, _, out = _forward_std(model, X)
    return float(np.mean((y - out) ** 2))


def loss(model: MlpModel, pairs) -> float:
    """Mean squared error between standardized targets and predictions."""
    if not pairs:
        raise ValueError("loss requires a nonempty batch")
    X, y = _encode_batch(model, pairs)
    return _loss_arrays(model, X, y)


def _backward_arrays(model: MlpModel, X: np.ndarray, y: np.ndarray):
    acts, zs, out = _forward_std(model, X)
    batch = X.shape[0]
    grads_w = [np.empty_like(W) for W in model.weights]
    grads_b = [np.empty_like(b) for b in model.biases]
    delta = ((2.0 / batch) * (out - y))[:, None]
    grads_w[-1] = delta.T @ acts[-1]
    grads_b[-1] = delta.sum(axis=0)
    back = delta @ model.weights[-1]
    for k in range(len(model.weights) - 2, -1, -1):
        dz = back * (zs[k] > 0.0)
        grads_w[k] = dz.T @ acts[k]
        grads_b[k] = dz.sum(axis=0)
        back = dz @ model.weights[k]
    return grads_w, grads_b


def backward(model: MlpModel, pairs) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Exact gradient of `loss` for every weight and bias."""
    if not pairs:
        raise ValueError("backward requires a nonempty batch")
    X, y = _encode_batch(model, pairs)
    return _backward_arrays(model, X, y)


@dataclass
class AdamState:
    step: int
    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]


def init_adam_state(model: MlpModel) -> AdamState:
    return AdamState(
        step=0,
        m_w=[np.zeros_like(W) for W in model.weights],
        v_w=[np.zeros_like(W) for W in model.weights],
        m_b=[np.zeros_like(b) for b in model.biases],
        v_b=[np.zeros_like(b) for b in model.biases],
    )


def adam_step(
    model: MlpModel,
    grads: tuple[list[np.ndarray], list[np.ndarray]],
    state: AdamState,
    cfg: TrainConfig,
) -> tuple[MlpModel, AdamState]:
    """One Adam update with bias-corrected moments; parameters and state are
    updated in place and returned for chaining."""
    grads_w, grads_b = grads
    state.step += 1
    t = state.step
    c1 = 1.0 - cfg.beta1**t
    c2 = 1.0 - cfg.beta2**t
    for params, gs, ms, vs in (
        (model.weights, grads_w, state.m_w, state.v_w),
        (model.biases, grads_b, state.m_b, state.v_b),
    ):
        for p, g, mom, vel in zip(params, gs, ms, vs):
            mom *= cfg.beta1
            mom += (1.0 - cfg.beta1) * g
            vel *= cfg.beta2
            vel += (1.0 - cfg.beta2) * g * g
            p -= cfg.learning_rate * (mom / c1) / (np.sqrt(vel / c2) + cfg.epsilon)
    return model, state


def _norm_constants(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std())
    if std < 1e-12:
        std = 1.0
    return mean, std


def train(
    train_pairs,
    test_pairs,
    cfg: TrainConfig,
    n: int,
    m: int,
) -> tuple[MlpModel, list[tuple[int, float, float]]]:
    """Train a fresh model; returns it plus a (epoch, train_mse, test_mse)
    trace whose first row is the untrained epoch-0 state.

    Standardization constants come from the training split only. The
    training set is reshuffled each epoch from the seeded stream; the last
    mini-batch of an epoch may be short.
    """
    if not train_pairs or not test_pairs:
        raise ValueError("train and test sets must be nonempty")
    rng = np.random.default_rng(cfg.seed)
    model = init_model(n, m, rng)
    model.value_norm = _norm_constants([p.current_value for p in train_pairs])
    model.target_norm = _norm_constants([p.target for p in train_pairs])
    X_train, y_train = _encode_batch(model, train_pairs)
    X_test, y_test = _encode_batch(model, test_pairs)
    state = init_adam_state(model)
    trace = [(0, _loss_arrays(model, X_train, y_train), _loss_arrays(model, X_test, y_test))]
    size = len(train_pairs)
    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(size)
        for start in range(0, size, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            grads = _backward_arrays(model, X_train[idx], y_train[idx])
            adam_step(model, grads, state, cfg)
        trace.append((epoch, _loss_arrays(model, X_train, y_train), _loss_arrays(model, X_test, y_test)))
    return model, trace


def grid_search(
    train_pairs,
    test_pairs,
    lr_grid,
    batch_grid,
    cfg: TrainConfig,
    n: int,
    m: int,
) -> tuple[TrainConfig, MlpModel, list[tuple[int, float, float]]]:
    """Train one model per (learning rate, batch size) cell and keep the one
    with the lowest final test loss; ties go to the earlier cell in
    row-major (lr, batch) order."""
    if not lr_grid or not batch_grid:
        raise ValueError("grids must be nonempty")
    best = None
    for lr in lr_grid:
        for batch_size in batch_grid:
            cell = replace(cfg, learning_rate=lr, batch_size=batch_size)
            model, trace = train(train_pairs, test_pairs, cell, n, m)
            final_test = trace[-1][2]
            if best is None or final_test < best[0]:
                best = (final_test, cell, model, trace)
    return best[1], best[2], best[3]


def predict_value_to_go(model: MlpModel, assignment: PartialAssignment, table: ValueTable) -> float:
    """Estimated best completion value for a partial assignment."""
    current = value_of(assignment, table)
    return forward(model, encode_input(assignment, current, model.m, model.value_norm))
