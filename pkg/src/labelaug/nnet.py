"""Minimal dense feed-forward network with manual backprop and Adam.

Backs both the reward predictor trunk and the desk-scale classifier. All
math is float64 numpy; training is single-threaded and deterministic given
its seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidInputError, ShapeError

ACTIVATIONS = ("relu", "identity", "softmax")


@dataclass
class DenseLayer:
    weights: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)
    activation: str


@dataclass
class DenseNet:
    layers: list[DenseLayer]

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[0]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[1]

    def parameters(self) -> list[np.ndarray]:
        """Flat list [W0, b0, W1, b1, ...]; order matched by backward/adam_step."""
        out: list[np.ndarray] = []
        for layer in self.layers:
            out.append(layer.weights)
            out.append(layer.bias)
        return out


@dataclass
class AdamState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: list[np.ndarray] = field(default_factory=list)
    second_moment: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list[np.ndarray], lr: float = 0.01,
                   beta1: float = 0.9, beta2: float = 0.999,
                   epsilon: float = 1e-8) -> "AdamState":
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ConfigError(f"betas must lie in [0,1): got {beta1}, {beta2}")
        return cls(
            lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon, step_count=0,
            first_moment=[np.zeros_like(p) for p in params],
            second_moment=[np.zeros_like(p) for p in params],
        )


def init_dense_net(layer_dims: list[int], activations: list[str] | None = None,
                   seed: int = 0) -> DenseNet:
    """Glorot-uniform weights, zero biases, deterministic given seed.

    activations has one entry per layer (len(layer_dims) - 1); defaults to
    relu on hidden layers and identity on the output.
    """
    if len(layer_dims) < 2:
        raise ConfigError("layer_dims needs at least input and output dims")
    if any(d <= 0 for d in layer_dims):
        raise ConfigError(f"layer dims must be positive: {layer_dims}")
    n_layers = len(layer_dims) - 1
    if activations is None:
        activations = ["relu"] * (n_layers - 1) + ["identity"]
    if len(activations) != n_layers:
        raise ConfigError("need one activation per layer")
    for i, act in enumerate(activations):
        if act not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {act!r}")
        if act == "softmax" and i != n_layers - 1:
            raise ConfigError("softmax is only valid on the output layer")

    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out, act in zip(layer_dims[:-1], layer_dims[1:], activations):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        layers.append(DenseLayer(w, np.zeros(fan_out), act))
    return DenseNet(layers)


def parameter_count(net: DenseNet) -> int:
    return sum(p.size for p in net.parameters())


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(net: DenseNet, x: np.ndarray) -> tuple[np.ndarray, list]:
    """Run the net on a (batch, in) or (in,) array.

    Returns (output, cache); pass the cache to backward. Output rank follows
    the input rank.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ShapeError(
            f"input has shape {x.shape}, net expects (*, {net.input_dim})")
    cache = []
    a = x
    for layer in net.layers:
        z = a @ layer.weights + layer.bias
        if layer.activation == "relu":
            out = np.maximum(z, 0.0)
        elif layer.activation == "identity":
            out = z
        else:  # softmax
            out = _softmax(z)
        cache.append((a, z, out))
        a = out
    return (a[0] if single else a), cache


def backward(net: DenseNet, cache: list, grad_output: np.ndarray
             ) -> tuple[list[np.ndarray], np.ndarray]:
    """Exact reverse-mode gradients for the composition run by forward.

    grad_output is dLoss/dOutput (post-activation). Returns (param_grads,
    input_grad) with param_grads ordered like net.parameters().
    """
    if not cache or len(cache) != len(net.layers):
        raise InvalidInputError("cache does not belong to this net; run forward first")
    grad = np.asarray(grad_output, dtype=np.float64)
    single = grad.ndim == 1
    if single:
        grad = grad[None, :]
    if grad.shape != cache[-1][2].shape:
        raise ShapeError(
            f"grad_output shape {grad.shape} != output shape {cache[-1][2].shape}")

    param_grads: list[np.ndarray] = [None] * (2 * len(net.layers))  # type: ignore
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        a_in, z, out = cache[i]
        if layer.activation == "relu":
            dz = grad * (z > 0.0)
        elif layer.activation == "identity":
            dz = grad
        else:  # softmax Jacobian-vector product, per sample
            dz = out * (grad - (grad * out).sum(axis=1, keepdims=True))
        param_grads[2 * i] = a_in.T @ dz
        param_grads[2 * i + 1] = dz.sum(axis=0)
        grad = dz @ layer.weights.T
    return param_grads, (grad[0] if single else grad)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState) -> None:
    """Bias-corrected Adam update, applied to params in place."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ShapeError("params, grads and state must have matching lengths")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if p.shape != g.shape:
            raise ShapeError(f"grad shape {g.shape} != param shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)


def train_regression(net: DenseNet, inputs: np.ndarray, targets: np.ndarray,
                     epochs: int, batch_size: int, seed: int,
                     lr: float = 0.01, beta1: float = 0.9, beta2: float = 0.999,
                     epsilon: float = 1e-8) -> float:
    """Squared-error regression with shuffled mini-batches; returns final MSE.

    Trains net in place; the net's output must be a single scalar per sample.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if inputs.ndim != 2 or inputs.shape[0] == 0:
        raise InvalidInputError("dataset must be a non-empty (n, d) array")
    if inputs.shape[0] != targets.shape[0]:
        raise ShapeError("inputs and targets disagree on sample count")
    if net.output_dim != 1:
        raise ShapeError("train_regression expects a scalar-output net")

    n = inputs.shape[0]
    params = net.parameters()
    state = AdamState.for_params(params, lr=lr, beta1=beta1, beta2=beta2,
                                 epsilon=epsilon)
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            xb, tb = inputs[idx], targets[idx]
            pred, cache = forward(net, xb)
            grad = 2.0 * (pred[:, 0] - tb)[:, None] / idx.size
            grads, _ = backward(net, cache, grad)
            adam_step(params, grads, state)
    final_pred, _ = forward(net, inputs)
    return float(np.mean((final_pred[:, 0] - targets) ** 2))


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray
                          ) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient w.r.t. the logits."""
    labels = np.asarray(labels)
    p = _softmax(np.asarray(logits, dtype=np.float64))
    n = labels.shape[0]
    eps = 1e-12
    loss = -np.log(p[np.arange(n), labels] + eps).mean()
    grad = p
    grad[np.arange(n), labels] -= 1.0
    return float(loss), grad / n
