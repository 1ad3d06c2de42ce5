"""Dense layers, activations, and losses as bidirectional (play/coplay) maps.

Each dense layer is a lens: the play direction maps parameters and an input
activation to an output activation, the coplay direction maps the incoming
activation gradient back to parameter gradients and an input gradient (the
coutility handed to the preceding layer). The full network is the sequential
composition of its layers; a forward tape caches every layer's input and
pre-activation so the backward pass can be run separately.

Vectors and matrices are plain float64 ndarrays. Per-example functions
operate on 1-d activations and are the reference semantics; the *_batch
variants operate on (batch, dim) arrays through the selected kernel backend
and average parameter gradients over the batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels

RELU = "relu"
IDENTITY = "identity"

__all__ = [
    "DenseParams",
    "NetworkSpec",
    "ForwardTape",
    "relu",
    "dense_play",
    "dense_coplay",
    "mse_loss",
    "softmax_cross_entropy",
    "init_params",
    "network_forward",
    "network_backward",
    "network_forward_batch",
    "network_backward_batch",
    "predict_batch",
    "mse_loss_batch",
    "softmax_cross_entropy_batch",
    "softmax_probs",
]


@dataclass
class DenseParams:
    """One layer's strategy: a weight matrix (n_out, n_in) and bias (n_out,)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ValueError("weights must be 2-d and bias 1-d")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ValueError(
                f"weights rows ({self.weights.shape[0]}) must equal "
                f"bias length ({self.bias.shape[0]})"
            )

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "DenseParams":
        return DenseParams(self.weights.copy(), self.bias.copy())


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture of a fully connected network.

    task is "regression" (single output neuron) or "classification"
    (output_dim neurons, one per class, trained with softmax cross-entropy).
    """

    input_dim: int
    output_dim: int = 1
    hidden_layers: int = 5
    hidden_width: int = 150
    task: str = "regression"

    def __post_init__(self):
        if min(self.input_dim, self.output_dim, self.hidden_width) < 1:
            raise ValueError("all dimensions must be >= 1")
        if self.hidden_layers < 0:
            raise ValueError("hidden_layers must be >= 0")
        if self.task not in ("regression", "classification"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == "regression" and self.output_dim != 1:
            raise ValueError("regression networks have a single output neuron")
        if self.task == "classification" and self.output_dim < 2:
            raise ValueError("classification networks need >= 2 output neurons")

    @property
    def num_layers(self) -> int:
        return self.hidden_layers + 1

    def layer_dims(self) -> list[tuple[int, int]]:
        """(n_in, n_out) per layer, first to last."""
        widths = [self.input_dim] + [self.hidden_width] * self.hidden_layers + [self.output_dim]
        return list(zip(widths[:-1], widths[1:]))

    def layer_widths(self) -> list[int]:
        """Output width per layer (hidden widths plus the output layer)."""
        return [self.hidden_width] * self.hidden_layers + [self.output_dim]

    def activation(self, layer: int) -> str:
        return RELU if layer < self.hidden_layers else IDENTITY


@dataclass
class ForwardTape:
    """Per-layer caches from a forward pass: inputs and pre-activations."""

    inputs: list = field(default_factory=list)
    preacts: list = field(default_factory=list)
    output: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.inputs)


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(z, dtype=np.float64), 0.0)


def _as_vector(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"{name} must be 1-d, got shape {x.shape}")
    return x


def dense_play(params: DenseParams, x, activation: str = RELU):
    """Forward map of one layer: returns (pre-activation z, activation a)."""
    x = _as_vector(x, "input")
    if x.shape[0] != params.n_in:
        raise ValueError(f"input length {x.shape[0]} != layer width {params.n_in}")
    z = params.weights @ x + params.bias
    a = np.maximum(z, 0.0) if activation == RELU else z.copy()
    return z, a


def dense_coplay(params: DenseParams, x, z, grad_a, activation: str = RELU):
    """Backward map of one layer.

    Forms the local gradient delta = grad_a * phi'(z) (phi' is the ReLU
    derivative, defined as 0 at z == 0, or 1 for the identity) and returns
    (grad_weights, grad_bias, grad_input) with grad_input = weights.T @ delta.
    """
    x = _as_vector(x, "input")
    z = _as_vector(z, "pre-activation")
    grad_a = _as_vector(grad_a, "activation gradient")
    if x.shape[0] != params.n_in or z.shape[0] != params.n_out:
        raise ValueError("layer shapes inconsistent with cached forward values")
    if grad_a.shape[0] != params.n_out:
        raise ValueError(f"gradient length {grad_a.shape[0]} != layer width {params.n_out}")
    delta = grad_a * (z > 0.0) if activation == RELU else grad_a
    grad_w = np.outer(delta, x)
    grad_b = delta.copy()
    grad_x = params.weights.T @ delta
    return grad_w, grad_b, grad_x


def mse_loss(pred, target):
    """Mean squared error over vector entries and its gradient wrt pred."""
    pred = _as_vector(pred, "pred")
    target = _as_vector(target, "target")
    if pred.shape != target.shape:
        raise ValueError("pred and target lengths differ")
    if pred.size == 0:
        raise ValueError("mse_loss needs at least one entry")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    grad = 2.0 * diff / pred.size
    return loss, grad


def softmax_cross_entropy(logits, class_index: int):
    """Cross-entropy of softmax(logits) against a class index.

    Stabilized by max subtraction; the gradient is softmax(logits) minus the
    one-hot target and always sums to zero.
    """
    logits = _as_vector(logits, "logits")
    if not 0 <= class_index < logits.size:
        raise ValueError(f"class index {class_index} out of range for {logits.size} logits")
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    total = exp.sum()
    loss = float(np.log(total) - shifted[class_index])
    grad = exp / total
    grad[class_index] -= 1.0
    return loss, grad


def init_params(spec: NetworkSpec, rng) -> list[DenseParams]:
    """Uniform(-limit, limit) weights with limit = sqrt(6/(fan_in+fan_out)),
    zero biases."""
    params = []
    for n_in, n_out in spec.layer_dims():
        limit = np.sqrt(6.0 / (n_in + n_out))
        w = rng.gen.uniform(-limit, limit, (n_out, n_in))
        params.append(DenseParams(w, np.zeros(n_out)))
    return params


def _check_layout(spec: NetworkSpec, params: list[DenseParams]):
    dims = spec.layer_dims()
    if len(params) != len(dims):
        raise ValueError(f"expected {len(dims)} layers, got {len(params)}")
    for k, ((n_in, n_out), p) in enumerate(zip(dims, params)):
        if (p.n_in, p.n_out) != (n_in, n_out):
            raise ValueError(
                f"layer {k} has shape ({p.n_out}, {p.n_in}), expected ({n_out}, {n_in})"
            )


def network_forward(spec: NetworkSpec, params: list[DenseParams], x):
    """Forward pass for a single example; returns (output, tape)."""
    _check_layout(spec, params)
    a = _as_vector(x, "input")
    if a.shape[0] != spec.input_dim:
        raise ValueError(f"input length {a.shape[0]} != input_dim {spec.input_dim}")
    tape = ForwardTape()
    for k, p in enumerate(params):
        tape.inputs.append(a)
        z, a = dense_play(p, a, spec.activation(k))
        tape.preacts.append(z)
    tape.output = a
    return a, tape


def network_backward(spec: NetworkSpec, params, tape: ForwardTape, grad_output, masks=None):
    """Backward pass for a single example.

    Walks the layers last to first; at each layer the incoming activation
    gradient is gated by the layer's mask (when masks are given) before the
    local gradient is formed, so weight gradients, bias gradients, and the
    propagated coutility of a masked neuron are all zeroed together.
    Returns [(grad_weights, grad_bias)] in layer order.
    """
    _check_layout(spec, params)
    if len(tape) != len(params):
        raise ValueError("tape does not match the network layout")
    if masks is not None and len(masks.per_layer_masks) != len(params):
        raise ValueError("mask plan does not match the network layout")
    g = _as_vector(grad_output, "output gradient")
    grads: list = [None] * len(params)
    for k in range(len(params) - 1, -1, -1):
        if masks is not None:
            mask = masks.per_layer_masks[k]
            if mask.shape[0] != params[k].n_out:
                raise ValueError(f"mask length mismatch at layer {k}")
            g = g * mask
        gw, gb, g = dense_coplay(params[k], tape.inputs[k], tape.preacts[k], g, spec.activation(k))
        grads[k] = (gw, gb)
    return grads


def network_forward_batch(spec: NetworkSpec, params: list[DenseParams], x: np.ndarray):
    """Forward pass for a (batch, input_dim) matrix via the kernel backend."""
    _check_layout(spec, params)
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != spec.input_dim:
        raise ValueError(f"expected (batch, {spec.input_dim}) inputs, got {a.shape}")
    tape = ForwardTape()
    for k, p in enumerate(params):
        tape.inputs.append(a)
        z, a = kernels.forward_batch(a, p.weights, p.bias, spec.activation(k) == RELU)
        tape.preacts.append(z)
    tape.output = a
    return a, tape


def network_backward_batch(spec, params, tape: ForwardTape, grad_output, masks=None):
    """Batch backward pass; parameter gradients are averaged over the batch.

    grad_output is (batch, output_dim) holding per-example loss gradients
    (without the 1/batch factor, which is applied here).
    """
    _check_layout(spec, params)
    if len(tape) != len(params):
        raise ValueError("tape does not match the network layout")
    g = np.ascontiguousarray(grad_output, dtype=np.float64)
    scale = 1.0 / g.shape[0]
    grads: list = [None] * len(params)
    for k in range(len(params) - 1, -1, -1):
        mask = None
        if masks is not None:
            mask = masks.per_layer_masks[k]
            if mask.shape[0] != params[k].n_out:
                raise ValueError(f"mask length mismatch at layer {k}")
        gw, gb, g = kernels.backward_batch(
            tape.inputs[k],
            params[k].weights,
            tape.preacts[k],
            g,
            mask,
            spec.activation(k) == RELU,
            scale,
        )
        grads[k] = (gw, gb)
    return grads


def predict_batch(spec: NetworkSpec, params, x: np.ndarray) -> np.ndarray:
    out, _ = network_forward_batch(spec, params, x)
    return out


def mse_loss_batch(pred: np.ndarray, target: np.ndarray):
    """Mean squared error over a batch; gradient carries per-example 2*diff.

    pred is (batch, 1), target is (batch,). The 1/batch factor is applied by
    the backward pass, so the returned gradient is per-example.
    """
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    diff = pred[:, 0] - target
    loss = float(np.mean(diff * diff))
    return loss, (2.0 * diff)[:, None]


def softmax_cross_entropy_batch(logits: np.ndarray, classes: np.ndarray):
    """Mean softmax cross-entropy over a batch and per-example gradients."""
    classes = np.asarray(classes, dtype=np.int64).reshape(-1)
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=1, keepdims=True)
    rows = np.arange(logits.shape[0])
    loss = float(np.mean(np.log(total[:, 0]) - shifted[rows, classes]))
    grad = exp / total
    grad[rows, classes] -= 1.0
    return loss, grad


def softmax_probs(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by max subtraction."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)
