"""Dense feed-forward autoencoder built from scratch on numpy.

Hidden layers use a PReLU activation with one learnable slope per layer;
the output layer is linear.  Backpropagation is exact, including the
gradient of the per-layer PReLU slope, and training uses the Adam update
with bias-corrected moments.  Everything runs in 64-bit precision and is
deterministic for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadArchitecture, ShapeMismatch

PRELU_INITIAL_SLOPE = 0.25

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

FREEZE_GROUPS = ("encoder", "decoder", "none")


@dataclass(eq=False)
class DenseLayer:
    """One affine layer; hidden layers carry a learnable PReLU slope."""

    weights: np.ndarray
    biases: np.ndarray
    prelu_slope: np.ndarray | None = None
    frozen: bool = False

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        self.biases = np.ascontiguousarray(self.biases, dtype=np.float64)
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise ShapeMismatch("weights must be [n_out x n_in] with matching biases")
        if self.prelu_slope is not None:
            self.prelu_slope = np.asarray(self.prelu_slope, dtype=np.float64).reshape(())

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> "DenseLayer":
        slope = None if self.prelu_slope is None else self.prelu_slope.copy()
        return DenseLayer(self.weights.copy(), self.biases.copy(), slope, self.frozen)


@dataclass(eq=False)
class Network:
    """Layer stack with an explicit encoder/decoder split.

    ``encoder_len`` counts the layers belonging to the encoder; the
    output of the last encoder layer is the bottleneck, which must be the
    narrowest of all non-final layer outputs.
    """

    layers: list[DenseLayer] = field(default_factory=list)
    encoder_len: int = 1

    def __post_init__(self):
        if len(self.layers) < 2:
            raise BadArchitecture("network needs at least two layers")
        if not 1 <= self.encoder_len < len(self.layers):
            raise BadArchitecture("encoder_len must satisfy 1 <= encoder_len < layer count")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if nxt.n_in != prev.n_out:
                raise ShapeMismatch("consecutive layer dimensions do not chain")
        for layer in self.layers[:-1]:
            if layer.prelu_slope is None:
                raise BadArchitecture("hidden layers need a PReLU slope")
        if self.layers[-1].prelu_slope is not None:
            raise BadArchitecture("output layer must be linear (no PReLU slope)")
        inner_widths = [layer.n_out for layer in self.layers[:-1]]
        if self.layers[self.encoder_len - 1].n_out != min(inner_widths):
            raise BadArchitecture("encoder must end at the narrowest (bottleneck) layer")

    @property
    def input_dim(self) -> int:
        return self.layers[0].n_in

    @property
    def output_dim(self) -> int:
        return self.layers[-1].n_out

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(layer.n_out for layer in self.layers[:-1])

    def copy(self) -> "Network":
        return Network([layer.copy() for layer in self.layers], self.encoder_len)


def build_network(input_dim: int, hidden_sizes: list[int], seed: int) -> Network:
    """Build a bottleneck autoencoder with He-initialised weights.

    ``hidden_sizes`` must read the same forwards and backwards and have a
    single narrowest entry in the middle, e.g. ``[25, 10, 25]``.
    """
    sizes = list(hidden_sizes)
    if input_dim < 1:
        raise BadArchitecture("input_dim must be at least 1")
    if not sizes:
        raise BadArchitecture("hidden_sizes must not be empty")
    if sizes != sizes[::-1]:
        raise BadArchitecture(f"hidden sizes {sizes} are not palindromic")
    if sizes.count(min(sizes)) != 1:
        raise BadArchitecture(f"hidden sizes {sizes} have no unique bottleneck")

    widths = [input_dim] + sizes + [input_dim]
    rng = np.random.default_rng(seed)
    layers = []
    for i, (n_in, n_out) in enumerate(zip(widths, widths[1:])):
        weights = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_out, n_in))
        biases = np.zeros(n_out)
        is_last = i == len(widths) - 2
        slope = None if is_last else np.float64(PRELU_INITIAL_SLOPE)
        layers.append(DenseLayer(weights, biases, slope))
    encoder_len = int(np.argmin(sizes)) + 1
    return Network(layers, encoder_len)


def forward(net: Network, batch: np.ndarray) -> np.ndarray:
    """Run a batch through the network; hidden PReLU, linear output."""
    activations, _ = _forward_cached(net, batch)
    return activations[-1]


def _forward_cached(net: Network, batch: np.ndarray):
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ShapeMismatch(
            f"batch width {x.shape[-1] if x.ndim else 0} != input dim {net.input_dim}"
        )
    activations = [x]
    preactivations = []
    for layer in net.layers:
        z = activations[-1] @ layer.weights.T + layer.biases
        preactivations.append(z)
        if layer.prelu_slope is None:
            activations.append(z)
        else:
            slope = float(layer.prelu_slope)
            activations.append(np.where(z > 0.0, z, slope * z))
    return activations, preactivations


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"prediction shape {pred.shape} != target shape {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


@dataclass(eq=False)
class LayerGradients:
    weights: np.ndarray
    biases: np.ndarray
    prelu_slope: np.ndarray | None


@dataclass(eq=False)
class Gradients:
    layers: list[LayerGradients]


def backward(net: Network, batch: np.ndarray, target: np.ndarray) -> Gradients:
    """Exact gradients of mse_loss(forward(net, batch), target).

    Frozen layers get zero gradients but still propagate the error signal
    to earlier layers.  The PReLU subgradient at z = 0 uses the positive
    branch (derivative 1).
    """
    activations, preactivations = _forward_cached(net, batch)
    return _backward_from_cache(net, activations, preactivations, target)


def _backward_from_cache(net, activations, preactivations, target) -> Gradients:
    y = np.asarray(target, dtype=np.float64)
    if y.shape != activations[-1].shape:
        raise ShapeMismatch(f"target shape {y.shape} != output shape {activations[-1].shape}")

    d_act = (2.0 / y.size) * (activations[-1] - y)
    per_layer: list[LayerGradients | None] = [None] * len(net.layers)
    for i in reversed(range(len(net.layers))):
        layer = net.layers[i]
        z = preactivations[i]
        if layer.prelu_slope is None:
            d_z = d_act
            g_slope = None
        else:
            slope = float(layer.prelu_slope)
            d_z = d_act * np.where(z >= 0.0, 1.0, slope)
            g_slope = np.asarray(np.sum(d_act * np.where(z < 0.0, z, 0.0)))
        if layer.frozen:
            per_layer[i] = LayerGradients(
                np.zeros_like(layer.weights),
                np.zeros_like(layer.biases),
                None if g_slope is None else np.zeros(()),
            )
        else:
            per_layer[i] = LayerGradients(d_z.T @ activations[i], d_z.sum(axis=0), g_slope)
        d_act = d_z @ layer.weights
    return Gradients(per_layer)


@dataclass(eq=False)
class AdamState:
    """Optimizer state; moment arrays mirror the parameter list exactly."""

    learning_rate: float
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON

    @classmethod
    def for_params(cls, params: list[np.ndarray], learning_rate: float) -> "AdamState":
        if learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        return cls(
            learning_rate=learning_rate,
            first_moment=[np.zeros_like(p) for p in params],
            second_moment=[np.zeros_like(p) for p in params],
        )


def adam_step(state: AdamState, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
    """One Adam update, in place, with bias-corrected moments."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ShapeMismatch("params, grads and moments must have equal lengths")
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    lr, eps = state.learning_rate, state.epsilon
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if p.shape != g.shape or m.shape != p.shape:
            raise ShapeMismatch("parameter/gradient/moment shapes disagree")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    state.step_count = t


def set_frozen(net: Network, group: str) -> Network:
    """Freeze the named layer group in place and return the network."""
    if group not in FREEZE_GROUPS:
        raise ValueError(f"group must be one of {FREEZE_GROUPS}")
    for i, layer in enumerate(net.layers):
        if group == "encoder":
            layer.frozen = i < net.encoder_len
        elif group == "decoder":
            layer.frozen = i >= net.encoder_len
        else:
            layer.frozen = False
    return net


def trainable_parameters(net: Network) -> list[np.ndarray]:
    """Views of every non-frozen parameter, in a fixed layer-major order."""
    params: list[np.ndarray] = []
    for layer in net.layers:
        if layer.frozen:
            continue
        params.append(layer.weights)
        params.append(layer.biases)
        if layer.prelu_slope is not None:
            params.append(layer.prelu_slope)
    return params


def trainable_gradients(net: Network, grads: Gradients) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for layer, lg in zip(net.layers, grads.layers):
        if layer.frozen:
            continue
        out.append(lg.weights)
        out.append(lg.biases)
        if lg.prelu_slope is not None:
            out.append(lg.prelu_slope)
    return out


def train_network(
    net: Network,
    data: np.ndarray,
    *,
    learning_rate: float,
    epochs: int,
    batch_size: int,
    rng: np.random.Generator,
) -> list[float]:
    """Train the autoencoder to reconstruct ``data``; returns epoch losses.

    Minibatches are reshuffled every epoch from ``rng``.  The returned
    list holds the exact mean squared error over each epoch's batches.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != net.input_dim:
        raise ShapeMismatch("training data width must equal the network input dim")
    n = data.shape[0]
    if n == 0:
        raise ShapeMismatch("training data is empty")
    params = trainable_parameters(net)
    state = AdamState.for_params(params, learning_rate)
    losses = []
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            batch = data[order[start : start + batch_size]]
            activations, preactivations = _forward_cached(net, batch)
            grads = _backward_from_cache(net, activations, preactivations, batch)
            total += mse_loss(activations[-1], batch) * batch.shape[0]
            adam_step(state, params, trainable_gradients(net, grads))
        losses.append(total / n)
    return losses
