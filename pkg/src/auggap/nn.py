"""Minimal feedforward network with manual gradients and Adam.

Shared by the learner, the statistics network of the neural information
estimator, and the density-ratio discriminator. Weights are (fan_in, fan_out)
matrices applied as x @ W + b; hidden activations are ReLU; the output head
is linear or softmax. Everything is float64 numpy and deterministic given the
seed.

Checkpoints use a flat binary layout: int32 little-endian header
[num_layers, size_0, ..., size_k] followed by float64 parameters in layer
order, weights then biases.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .core import LossSpec
from .errors import InvalidInputError


@dataclass
class Network:
    layer_sizes: list
    weights: list
    biases: list
    output_head: str = "linear"
    activation: str = "relu"

    def __post_init__(self):
        if self.output_head not in ("linear", "softmax"):
            raise InvalidInputError("output_head must be linear or softmax")
        if self.activation != "relu":
            raise InvalidInputError("hidden activation must be relu")
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise InvalidInputError("parameter count does not match layer_sizes")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            fan_in, fan_out = self.layer_sizes[k], self.layer_sizes[k + 1]
            if w.shape != (fan_in, fan_out) or b.shape != (fan_out,):
                raise InvalidInputError(f"layer {k} parameter shapes inconsistent")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InvalidInputError(f"layer {k} has non-finite parameters")

    def copy(self) -> "Network":
        return Network(
            list(self.layer_sizes),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.output_head,
            self.activation,
        )

    def flat_parameters(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)


def init_network(layer_sizes, seed: int, output_head: str = "linear") -> Network:
    """Glorot-uniform initialization: +-sqrt(6 / (fan_in + fan_out))."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Network(list(layer_sizes), weights, biases, output_head)


def forward(net: Network, batch: np.ndarray) -> np.ndarray:
    return forward_cached(net, batch)[0]


def forward_cached(net: Network, batch: np.ndarray):
    """Forward pass returning (outputs, per-layer pre/post activations)."""
    x = np.atleast_2d(np.asarray(batch, dtype=float))
    if x.shape[1] != net.layer_sizes[0]:
        raise InvalidInputError(
            f"batch has {x.shape[1]} features, network expects {net.layer_sizes[0]}"
        )
    activations = [x]
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = activations[-1] @ w + b
        if k < last:
            z = np.maximum(z, 0.0)
        activations.append(z)
    out = activations[-1]
    if net.output_head == "softmax":
        out = softmax(out)
    return out, activations


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def backward_from_output_grad(net: Network, activations, grad_out: np.ndarray):
    """Backpropagate d(objective)/d(pre-head output) to parameter gradients.

    ``grad_out`` must be the gradient w.r.t. the final affine layer's output
    (logits for a softmax head).
    """
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.biases)
    delta = np.asarray(grad_out, dtype=float)
    for k in range(len(net.weights) - 1, -1, -1):
        inputs = activations[k]
        grads_w[k] = inputs.T @ delta
        grads_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ net.weights[k].T) * (activations[k] > 0)
    return grads_w, grads_b


def loss_and_output_grad(net: Network, outputs: np.ndarray, targets, loss: LossSpec):
    """Mean clipped batch loss and its gradient w.r.t. the final affine output.

    Clipped examples contribute zero gradient. For the cross-entropy kind,
    ``outputs`` are logits of a softmax head; for squared loss they are the
    linear head's values.
    """
    batch = outputs.shape[0]
    if loss.kind == "clipped-squared":
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        if targets.shape != outputs.shape:
            raise InvalidInputError("target shape mismatch for squared loss")
        diff = outputs - targets
        raw = np.sum(diff * diff, axis=1)
        clipped = np.minimum(raw, loss.clip_M)
        active = (raw < loss.clip_M).astype(float)
        grad = (2.0 / batch) * diff * active[:, None]
        return float(clipped.mean()), grad
    if loss.kind == "clipped-cross-entropy":
        labels = np.asarray(targets, dtype=int)
        if labels.shape != (batch,):
            raise InvalidInputError("cross-entropy targets must be one label per row")
        logp = log_softmax(outputs)
        raw = -logp[np.arange(batch), labels]
        clipped = np.minimum(raw, loss.clip_M)
        active = (raw < loss.clip_M).astype(float)
        probs = np.exp(logp)
        onehot = np.zeros_like(probs)
        onehot[np.arange(batch), labels] = 1.0
        grad = (probs - onehot) * active[:, None] / batch
        return float(clipped.mean()), grad
    raise InvalidInputError(f"loss kind {loss.kind!r} has no gradient")


def backward(net: Network, batch, targets, loss: LossSpec):
    """Gradients of the mean batch loss w.r.t. every weight and bias."""
    _, activations = forward_cached(net, batch)
    _, grad_out = loss_and_output_grad(net, activations[-1], targets, loss)
    return backward_from_output_grad(net, activations, grad_out)


def batch_loss(net: Network, batch, targets, loss: LossSpec) -> float:
    _, activations = forward_cached(net, batch)
    value, _ = loss_and_output_grad(net, activations[-1], targets, loss)
    return value


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 128
    epochs: int = 5
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise InvalidInputError("beta1 and beta2 must lie in (0, 1)")


@dataclass
class AdamState:
    step: int = 0
    m_w: list = field(default_factory=list)
    v_w: list = field(default_factory=list)
    m_b: list = field(default_factory=list)
    v_b: list = field(default_factory=list)

    @staticmethod
    def for_network(net: Network) -> "AdamState":
        return AdamState(
            0,
            [np.zeros_like(w) for w in net.weights],
            [np.zeros_like(w) for w in net.weights],
            [np.zeros_like(b) for b in net.biases],
            [np.zeros_like(b) for b in net.biases],
        )


def adam_step(net: Network, state: AdamState, grads_w, grads_b, config: TrainConfig) -> None:
    """One bias-corrected Adam update, in place."""
    state.step += 1
    t = state.step
    b1, b2 = config.beta1, config.beta2
    corr1 = 1.0 - b1**t
    corr2 = 1.0 - b2**t
    for params, grads, ms, vs in (
        (net.weights, grads_w, state.m_w, state.v_w),
        (net.biases, grads_b, state.m_b, state.v_b),
    ):
        for k, g in enumerate(grads):
            ms[k] = b1 * ms[k] + (1 - b1) * g
            vs[k] = b2 * vs[k] + (1 - b2) * g * g
            m_hat = ms[k] / corr1
            v_hat = vs[k] / corr2
            params[k] -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)


def train(net: Network, inputs, targets, config: TrainConfig, loss: LossSpec):
    """Adam training with seeded per-epoch shuffling; the last partial batch is kept.

    Returns (trained network, per-epoch mean loss trace). Pure function of
    (initial net, data, config); the input network is not modified.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    if x.shape[0] == 0:
        raise InvalidInputError("dataset is empty")
    y = np.asarray(targets)
    net = net.copy()
    state = AdamState.for_network(net)
    rng = np.random.default_rng(config.seed)
    trace = []
    for _ in range(config.epochs):
        order = rng.permutation(x.shape[0])
        epoch_loss, seen = 0.0, 0
        for start in range(0, x.shape[0], config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = x[idx], y[idx]
            _, activations = forward_cached(net, xb)
            value, grad_out = loss_and_output_grad(net, activations[-1], yb, loss)
            grads_w, grads_b = backward_from_output_grad(net, activations, grad_out)
            adam_step(net, state, grads_w, grads_b, config)
            epoch_loss += value * len(idx)
            seen += len(idx)
        trace.append(epoch_loss / seen)
    return net, trace


# ---------------------------------------------------------------------------
# Checkpoint serialization
# ---------------------------------------------------------------------------

def save_checkpoint(net: Network, path) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack("<i", len(net.layer_sizes)))
        fh.write(struct.pack(f"<{len(net.layer_sizes)}i", *net.layer_sizes))
        for w, b in zip(net.weights, net.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_checkpoint(path, output_head: str = "linear") -> Network:
    with open(path, "rb") as fh:
        (count,) = struct.unpack("<i", fh.read(4))
        sizes = list(struct.unpack(f"<{count}i", fh.read(4 * count)))
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = np.frombuffer(fh.read(8 * fan_in * fan_out), dtype="<f8").reshape(fan_in, fan_out)
            b = np.frombuffer(fh.read(8 * fan_out), dtype="<f8")
            weights.append(w.copy())
            biases.append(b.copy())
    return Network(sizes, weights, biases, output_head)
