"""Dense networks with manual differentiation, Adam, losses, and persistence.

The layer vocabulary is deliberately small (relu, sigmoid, tanh, identity,
softmax over affine maps) so every gradient can be written out by hand and
checked against finite differences. Everything runs in float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FormatError, StateError
from .numerics import RandomSource

ACTIVATIONS = ("relu", "sigmoid", "tanh", "identity", "softmax")
_ACT_IDS = {name: i for i, name in enumerate(ACTIVATIONS)}

MODEL_MAGIC = b"SEMLINK1"


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if kind == "tanh":
        return np.tanh(z)
    if kind == "identity":
        return z
    if kind == "softmax":
        shifted = z - np.max(z, axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / np.sum(e, axis=1, keepdims=True)
    raise DomainError(f"unknown activation {kind!r}")


def _activation_backward(grad_out: np.ndarray, z: np.ndarray, out: np.ndarray,
                         kind: str) -> np.ndarray:
    if kind == "relu":
        return grad_out * (z > 0)
    if kind == "sigmoid":
        return grad_out * out * (1.0 - out)
    if kind == "tanh":
        return grad_out * (1.0 - out * out)
    if kind == "identity":
        return grad_out
    if kind == "softmax":
        # row-wise Jacobian: s * (g - <g, s>)
        dot = np.sum(grad_out * out, axis=1, keepdims=True)
        return out * (grad_out - dot)
    raise DomainError(f"unknown activation {kind!r}")


@dataclass
class Layer:
    weight: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray    # (out_dim,)
    activation: str
    grad_weight: np.ndarray = field(default=None, repr=False)
    grad_bias: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}")
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise DomainError("layer weight must be (out, in) with matching bias")
        if self.grad_weight is None:
            self.grad_weight = np.zeros_like(self.weight)
        if self.grad_bias is None:
            self.grad_bias = np.zeros_like(self.bias)


class DenseModel:
    """A stack of affine+activation layers with gradient buffers."""

    def __init__(self, layers: list[Layer]):
        if not layers:
            raise DomainError("a model needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if nxt.weight.shape[1] != prev.weight.shape[0]:
                raise DomainError(
                    f"layer dimensions do not chain: {prev.weight.shape} -> {nxt.weight.shape}"
                )
        self.layers = layers
        self._cache: list[tuple[np.ndarray, np.ndarray, np.ndarray]] | None = None

    @property
    def in_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Run a (batch, in_dim) array through the stack, caching for backward."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.in_dim:
            raise DomainError(f"expected input dim {self.in_dim}, got {x.shape[1]}")
        cache = []
        for layer in self.layers:
            z = x @ layer.weight.T + layer.bias
            out = _activate(z, layer.activation)
            cache.append((x, z, out))
            x = out
        self._cache = cache
        return x

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        """Accumulate parameter gradients; returns the gradient w.r.t. input."""
        if self._cache is None:
            raise StateError("backward called without a cached forward pass")
        grad = np.asarray(grad_out, dtype=np.float64)
        for layer, (x_in, z, out) in zip(reversed(self.layers), reversed(self._cache)):
            grad_z = _activation_backward(grad, z, out, layer.activation)
            layer.grad_weight += grad_z.T @ x_in
            layer.grad_bias += grad_z.sum(axis=0)
            grad = grad_z @ layer.weight
        return grad

    def zero_grads(self) -> None:
        for layer in self.layers:
            layer.grad_weight[...] = 0.0
            layer.grad_bias[...] = 0.0

    def copy(self) -> "DenseModel":
        return DenseModel([
            Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers
        ])


def init_model(dims: list[int], activations: list[str], rng: RandomSource) -> DenseModel:
    """Glorot-normal initialization of a dense stack.

    dims has one more entry than activations: dims[i] -> dims[i+1] with
    activations[i] applied after each affine map.
    """
    if len(dims) != len(activations) + 1:
        raise DomainError("need len(dims) == len(activations) + 1")
    layers = []
    for i, act in enumerate(activations):
        fan_in, fan_out = dims[i], dims[i + 1]
        std = np.sqrt(2.0 / (fan_in + fan_out))
        w = rng.std_normal((fan_out, fan_in)) * std
        layers.append(Layer(w, np.zeros(fan_out), act))
    return DenseModel(layers)


class AdamState:
    """Bias-corrected Adam moments for one model."""

    def __init__(self, model: DenseModel, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = [(np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in model.layers]
        self._v = [(np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in model.layers]

    def step(self, model: DenseModel, lr: float) -> None:
        """One Adam update from the model's accumulated gradients."""
        self.step_count += 1
        b1c = 1.0 - self.beta1 ** self.step_count
        b2c = 1.0 - self.beta2 ** self.step_count
        for layer, (mw, mb), (vw, vb) in zip(model.layers, self._m, self._v):
            for param, grad, m, v in (
                (layer.weight, layer.grad_weight, mw, vw),
                (layer.bias, layer.grad_bias, mb, vb),
            ):
                m *= self.beta1
                m += (1.0 - self.beta1) * grad
                v *= self.beta2
                v += (1.0 - self.beta2) * grad * grad
                param -= lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def adam_step(model: DenseModel, state: AdamState, lr: float) -> None:
    state.step(model, lr)


def mse_loss(u: np.ndarray, u_hat: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean over examples of the squared L2 distance, with d/d(u_hat)."""
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    u_hat = np.atleast_2d(np.asarray(u_hat, dtype=np.float64))
    if u.shape != u_hat.shape:
        raise DomainError(f"shape mismatch {u.shape} vs {u_hat.shape}")
    diff = u_hat - u
    value = float(np.mean(np.sum(diff * diff, axis=1)))
    grad = 2.0 * diff / u.shape[0]
    return value, grad


def ce_loss(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy of softmax(logits) against integer labels.

    Stabilized by max subtraction; the gradient is (softmax - onehot)/batch.
    """
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if labels.shape[0] != logits.shape[0]:
        raise DomainError("one label per logits row required")
    shifted = logits - np.max(logits, axis=1, keepdims=True)
    log_z = np.log(np.sum(np.exp(shifted), axis=1))
    value = float(np.mean(log_z - shifted[np.arange(len(labels)), labels]))
    softmax = np.exp(shifted) / np.sum(np.exp(shifted), axis=1, keepdims=True)
    grad = softmax
    grad[np.arange(len(labels)), labels] -= 1.0
    return value, grad / len(labels)


def save_model(model: DenseModel, path) -> None:
    """Write the binary container: magic, layer headers, float64 parameters."""
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(model.layers)))
        for layer in model.layers:
            rows, cols = layer.weight.shape
            fh.write(struct.pack("<IIB", rows, cols, _ACT_IDS[layer.activation]))
        for layer in model.layers:
            fh.write(layer.weight.astype("<f8").tobytes(order="C"))
            fh.write(layer.bias.astype("<f8").tobytes(order="C"))


def load_model(path) -> DenseModel:
    """Read a model container; the inverse of save_model, bitwise exact."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:8]!r}, expected {MODEL_MAGIC!r}")
    off = len(MODEL_MAGIC)
    if len(blob) < off + 4:
        raise FormatError(f"{path}: truncated header at byte {len(blob)}")
    (n_layers,) = struct.unpack_from("<I", blob, off)
    off += 4
    headers = []
    for _ in range(n_layers):
        if len(blob) < off + 9:
            raise FormatError(f"{path}: truncated layer header at byte {off}")
        rows, cols, act_id = struct.unpack_from("<IIB", blob, off)
        off += 9
        if act_id >= len(ACTIVATIONS):
            raise FormatError(f"{path}: unknown activation id {act_id}")
        headers.append((rows, cols, ACTIVATIONS[act_id]))
    layers = []
    for rows, cols, act in headers:
        n_bytes = 8 * rows * (cols + 1)
        if len(blob) < off + n_bytes:
            raise FormatError(
                f"{path}: expected {off + n_bytes} bytes, file has {len(blob)}"
            )
        w = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=off)
        off += 8 * rows * cols
        b = np.frombuffer(blob, dtype="<f8", count=rows, offset=off)
        off += 8 * rows
        layers.append(Layer(w.reshape(rows, cols).copy(), b.copy(), act))
    return DenseModel(layers)
