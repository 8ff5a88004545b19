"""Two-layer feedforward network trained with full-batch Adam (numpy only).

    y = W2 act(W1 x + b1) + b2

Batches are row-major: ``X`` has shape (N, d_in), outputs (N, d_out).
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import InvalidArgumentError

MODEL_FORMAT = "maxwell-ddm-nn model"
MODEL_VERSION = 1

SELU_ALPHA = 1.6732632423543772
SELU_SCALE = 1.0507009873554805


class Activation(enum.Enum):
    SIGMOID = "sigmoid"
    RELU = "relu"
    TANH = "tanh"
    LOGSIGMOID = "logsigmoid"
    CELU = "celu"
    SELU = "selu"


class TrainingDivergedError(FloatingPointError):
    def __init__(self, iteration, value):
        super().__init__(f"non-finite loss {value!r} at iteration {iteration}")
        self.iteration = iteration


class ModelFormatError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def _sigmoid(x):
    return expit(x)  # overflow-safe logistic


def activate(kind: Activation, x):
    """Return (value, derivative) of the activation, elementwise."""
    kind = Activation(kind)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if kind is Activation.SIGMOID:
        s = _sigmoid(x)
        v, d = s, s * (1.0 - s)
    elif kind is Activation.RELU:
        v, d = np.maximum(x, 0.0), (x > 0).astype(float)
    elif kind is Activation.TANH:
        v = np.tanh(x)
        d = 1.0 - v * v
    elif kind is Activation.LOGSIGMOID:
        # log(sigmoid(x)) = -log(1 + e^{-x}) = min(x, 0) - log1p(e^{-|x|})
        v = np.minimum(x, 0.0) - np.log1p(np.exp(-np.abs(x)))
        d = _sigmoid(-x)
    elif kind is Activation.CELU:
        em1 = np.expm1(np.minimum(x, 0.0))
        v = np.maximum(x, 0.0) + np.minimum(0.0, em1)
        d = np.where(x > 0, 1.0, em1 + 1.0)
    else:
        em1 = np.expm1(np.minimum(x, 0.0))
        v = SELU_SCALE * (np.maximum(x, 0.0) + np.minimum(0.0, SELU_ALPHA * em1))
        d = SELU_SCALE * np.where(x > 0, 1.0, SELU_ALPHA * (em1 + 1.0))
    if scalar:
        return float(v[0]), float(d[0])
    return v, d


def activation_eval(kind, x):
    return activate(kind, x)


@dataclass(frozen=True)
class NetworkShape:
    d_in: int = 16
    d_hidden: int = 500
    d_out: int = 8
    activation: Activation = Activation.SIGMOID


PARAM_NAMES = ("W1", "b1", "W2", "b2")


@dataclass(eq=False)
class Network:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    activation: Activation = Activation.SIGMOID

    def __post_init__(self):
        self.activation = Activation(self.activation)
        h, i = self.W1.shape
        o, h2 = self.W2.shape
        if h2 != h or self.b1.shape != (h,) or self.b2.shape != (o,):
            raise InvalidArgumentError("inconsistent layer dimensions")

    @property
    def shape(self) -> NetworkShape:
        return NetworkShape(self.W1.shape[1], self.W1.shape[0], self.W2.shape[0], self.activation)

    def params(self) -> list[np.ndarray]:
        return [self.W1, self.b1, self.W2, self.b2]

    def copy(self) -> "Network":
        return Network(*(p.copy() for p in self.params()), activation=self.activation)

    def __call__(self, X):
        return forward(self, X)


def init_weights(shape: NetworkShape = NetworkShape(), seed: int = 0) -> Network:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases of
    each affine layer, drawn from ``numpy.random.default_rng(seed)`` (PCG64)
    in the order W1, b1, W2, b2."""
    rng = np.random.default_rng(seed)
    b_in = 1.0 / math.sqrt(shape.d_in)
    b_hid = 1.0 / math.sqrt(shape.d_hidden)
    W1 = rng.uniform(-b_in, b_in, (shape.d_hidden, shape.d_in))
    b1 = rng.uniform(-b_in, b_in, shape.d_hidden)
    W2 = rng.uniform(-b_hid, b_hid, (shape.d_out, shape.d_hidden))
    b2 = rng.uniform(-b_hid, b_hid, shape.d_out)
    return Network(W1, b1, W2, b2, shape.activation)


def _as_batch(net: Network, X):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != net.W1.shape[1]:
        raise InvalidArgumentError(f"input width {X.shape[1]} != {net.W1.shape[1]}")
    return X, single


def forward(net: Network, X):
    X, single = _as_batch(net, X)
    a, _ = activate(net.activation, X @ net.W1.T + net.b1)
    Y = a @ net.W2.T + net.b2
    return Y[0] if single else Y


class Reduction(enum.Enum):
    MEAN = "mean"
    HALF_SUM = "half_sum"


def loss(outputs, targets, reduction=Reduction.MEAN) -> float:
    """``MEAN``: average squared error over all N*d_out entries.
    ``HALF_SUM``: 0.5 * sum of squared errors."""
    Y = np.atleast_2d(np.asarray(outputs, dtype=float))
    T = np.atleast_2d(np.asarray(targets, dtype=float))
    if Y.shape != T.shape:
        raise InvalidArgumentError(f"output shape {Y.shape} != target shape {T.shape}")
    if Y.size == 0:
        raise InvalidArgumentError("empty batch")
    sq = np.sum((Y - T) ** 2)
    if Reduction(reduction) is Reduction.MEAN:
        return float(sq / Y.size)
    return float(0.5 * sq)


def backward(net: Network, X, T, reduction=Reduction.MEAN):
    """Loss value and gradients (dW1, db1, dW2, db2) for a batch."""
    X, _ = _as_batch(net, X)
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if T.shape != (X.shape[0], net.W2.shape[0]):
        raise InvalidArgumentError(f"target shape {T.shape} does not match the batch")
    if X.shape[0] == 0:
        raise InvalidArgumentError("empty batch")
    z = X @ net.W1.T + net.b1
    a, da = activate(net.activation, z)
    R = a @ net.W2.T + net.b2 - T
    if Reduction(reduction) is Reduction.MEAN:
        value = float(np.sum(R * R) / R.size)
        dY = R * (2.0 / R.size)
    else:
        value = float(0.5 * np.sum(R * R))
        dY = R
    dW2 = dY.T @ a
    db2 = dY.sum(axis=0)
    dZ = (dY @ net.W2) * da
    dW1 = dZ.T @ X
    db1 = dZ.sum(axis=0)
    return value, (dW1, db1, dW2, db2)


@dataclass
class AdamState:
    """Adam moments; ``step`` counts completed updates."""

    lr: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m1: list | None = None
    m2: list | None = None
    step: int = 0


def adam_step(state: AdamState, params, grads):
    """In-place Adam update of ``params``; returns ``(params, state)``.

    m1 <- b1 m1 + (1-b1) g,  m2 <- b2 m2 + (1-b2) g^2,
    p = -m1_hat / sqrt(m2_hat + eps),  x <- x + lr p
    with bias corrections using the post-increment step count.
    """
    if state.m1 is None:
        state.m1 = [np.zeros_like(p) for p in params]
        state.m2 = [np.zeros_like(p) for p in params]
    state.step += 1
    c1 = 1.0 - state.beta1**state.step
    c2 = 1.0 - state.beta2**state.step
    for p, g, m1, m2 in zip(params, grads, state.m1, state.m2):
        if p.shape != g.shape:
            raise InvalidArgumentError("gradient shape mismatch")
        m1 *= state.beta1
        m1 += (1.0 - state.beta1) * g
        m2 *= state.beta2
        m2 += (1.0 - state.beta2) * g * g
        p -= state.lr * (m1 / c1) / np.sqrt(m2 / c2 + state.eps)
    return params, state


@dataclass(frozen=True)
class TrainConfig:
    tol: float = 3e-3
    max_iter: int = 20000
    schedule: tuple = ((1e-5, 20000),)
    seed: int = 0
    reduction: Reduction = Reduction.MEAN


@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)
    test_loss: list = field(default_factory=list)
    lr: list = field(default_factory=list)
    iterations: int = 0
    wall_time: float = 0.0

    @property
    def final_test_loss(self) -> float:
        return self.test_loss[-1]

    def to_csv(self) -> str:
        rows = ["iteration,lr,train_loss,test_loss"]
        for k, (lr, a, b) in enumerate(zip(self.lr, self.train_loss, self.test_loss)):
            rows.append(f"{k},{lr:.17g},{a:.17g},{b:.17g}")
        return "\n".join(rows) + "\n"


def train(net: Network, train_set, test_set, config: TrainConfig = TrainConfig(),
          state: AdamState | None = None) -> TrainReport:
    """Full-batch Adam on ``train_set = (X, T)`` until the test loss
    (evaluated before each update) drops to ``tol`` or ``max_iter``
    updates are done. ``schedule`` lists (lr, budget) stages run in order;
    the Adam moments carry over between stages and across calls when a
    ``state`` is passed back in.
    """
    X, T = (np.asarray(a, dtype=float) for a in train_set)
    Xt, Tt = (np.asarray(a, dtype=float) for a in test_set)
    if len(X) == 0 or len(Xt) == 0:
        raise InvalidArgumentError("training and test sets must be non-empty")
    state = AdamState() if state is None else state
    report = TrainReport()
    t0 = time.perf_counter()
    params = net.params()
    it = 0
    for lr, budget in config.schedule:
        state.lr = lr
        k = 0
        while k < budget and it < config.max_iter:
            test_value = loss(forward(net, Xt), Tt, config.reduction)
            if not math.isfinite(test_value):
                raise TrainingDivergedError(it, test_value)
            if test_value <= config.tol:
                break
            value, grads = backward(net, X, T, config.reduction)
            if not math.isfinite(value):
                raise TrainingDivergedError(it, value)
            report.train_loss.append(value)
            report.test_loss.append(test_value)
            report.lr.append(lr)
            adam_step(state, params, grads)
            it += 1
            k += 1
        else:
            continue
        break
    report.iterations = it
    report.wall_time = time.perf_counter() - t0
    # loss after the last update
    report.train_loss.append(loss(forward(net, X), T, config.reduction))
    report.test_loss.append(loss(forward(net, Xt), Tt, config.reduction))
    report.lr.append(float("nan"))
    return report


def save_model(net: Network, path) -> None:
    with open(path, "w") as fh:
        fh.write(dump_model(net))


def dump_model(net: Network) -> str:
    """Text model file: header, key = value lines, 17 significant digits.

    Arrays are written row-major on one line each.
    """
    s = net.shape
    lines = [
        f"# {MODEL_FORMAT}",
        f"version = {MODEL_VERSION}",
        f"activation = {s.activation.value}",
        f"d_in = {s.d_in}",
        f"d_hidden = {s.d_hidden}",
        f"d_out = {s.d_out}",
    ]
    for name, arr in zip(PARAM_NAMES, net.params()):
        lines.append(f"{name} = " + " ".join(f"{v:.17g}" for v in arr.ravel()))
    return "\n".join(lines) + "\n"


def load_model(path) -> Network:
    with open(path) as fh:
        return parse_model(fh.read())


def parse_model(text: str) -> Network:
    lines = text.splitlines()
    if not lines or lines[0].strip() != f"# {MODEL_FORMAT}":
        raise ModelFormatError("missing model header", 1)
    kv: dict[str, tuple[str, int]] = {}
    for no, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        if "=" not in raw:
            raise ModelFormatError(f"expected 'key = value', got {raw[:40]!r}", no)
        key, val = (p.strip() for p in raw.split("=", 1))
        kv[key] = (val, no)
    for key in ("version", "activation", "d_in", "d_hidden", "d_out", *PARAM_NAMES):
        if key not in kv:
            raise ModelFormatError(f"missing key {key!r}")
    if kv["version"][0] != str(MODEL_VERSION):
        raise ModelFormatError(f"unsupported version {kv['version'][0]}", kv["version"][1])
    try:
        act = Activation(kv["activation"][0])
    except ValueError:
        raise ModelFormatError(f"unknown activation {kv['activation'][0]!r}", kv["activation"][1]) from None
    dims = {}
    for key in ("d_in", "d_hidden", "d_out"):
        try:
            dims[key] = int(kv[key][0])
        except ValueError:
            raise ModelFormatError(f"{key} is not an integer", kv[key][1]) from None
    shapes = {
        "W1": (dims["d_hidden"], dims["d_in"]),
        "b1": (dims["d_hidden"],),
        "W2": (dims["d_out"], dims["d_hidden"]),
        "b2": (dims["d_out"],),
    }
    arrays = {}
    for key, shp in shapes.items():
        val, no = kv[key]
        try:
            arr = np.array([float(v) for v in val.split()])
        except ValueError as exc:
            raise ModelFormatError(f"bad number in {key}: {exc}", no) from None
        if arr.size != int(np.prod(shp)):
            raise ModelFormatError(f"{key} has {arr.size} values, expected {int(np.prod(shp))}", no)
        arrays[key] = arr.reshape(shp)
    return Network(arrays["W1"], arrays["b1"], arrays["W2"], arrays["b2"], act)

