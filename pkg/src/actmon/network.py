"""Minimal feed-forward network runtime.

Just enough of a dense-network stack to make the repository self-sufficient
at desk scale: load/save a model, run forward passes that record every
layer's output, take argmax decisions, backpropagate an output neuron's
gradient to a hidden layer, and train a small classifier on a built-in
synthetic dataset.  All arithmetic is float64; the monitor only consumes
activation signs, but the gradient tests need full precision.

Layer ``l`` (0-based) maps a width ``d_{l-1}`` vector to width ``d_l`` via
``x @ weights + bias`` followed by an optional ReLU.  The final layer must
be linear: decisions are taken on raw scores.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatVersionError, SchemaError

MODEL_VERSION = 1

ACTIVATIONS = ("relu", "none")

# geometry of the built-in blobs dataset
BLOB_STD = 1.0
BLOB_RADIUS = 5.0


@dataclass
class Layer:
    weights: np.ndarray  # (d_in, d_out)
    bias: np.ndarray     # (d_out,)
    activation: str      # "relu" or "none"


@dataclass
class ModelSpec:
    """Immutable description of a trained dense network."""

    layers: list[Layer]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("model needs at least one layer")
        for i, layer in enumerate(self.layers):
            w, b = np.asarray(layer.weights), np.asarray(layer.bias)
            if w.ndim != 2 or b.ndim != 1 or w.shape[1] != b.shape[0]:
                raise ValueError(f"layer {i}: weight/bias shapes disagree")
            if layer.activation not in ACTIVATIONS:
                raise ValueError(
                    f"layer {i}: unknown activation {layer.activation!r}")
            if i > 0 and self.layers[i - 1].weights.shape[1] != w.shape[0]:
                raise ValueError(
                    f"layer {i}: input width {w.shape[0]} does not match "
                    f"previous layer output")
            layer.weights = w.astype(np.float64)
            layer.bias = b.astype(np.float64)
        if self.layers[-1].activation != "none":
            raise ValueError("final layer must be linear (activation 'none')")
        if self.class_count < 2:
            raise ValueError("model must score at least 2 classes")

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[0]

    @property
    def class_count(self) -> int:
        return self.layers[-1].weights.shape[1]

    def layer_width(self, layer: int) -> int:
        return self.layers[layer].weights.shape[1]

    def is_relu_layer(self, layer: int) -> bool:
        return 0 <= layer < len(self.layers) \
            and self.layers[layer].activation == "relu"


@dataclass
class LayerTrace:
    """Per-layer post-activation outputs for one input."""

    outputs: list[np.ndarray]  # outputs[l] is the output of layer l

    @property
    def final(self) -> np.ndarray:
        return self.outputs[-1]


def forward(model: ModelSpec, inputs) -> LayerTrace:
    """Run one input through the network, recording every layer output."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.shape != (model.input_dim,):
        raise ValueError(
            f"input width {x.shape} does not match model input "
            f"dim {model.input_dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite value in network input")
    outputs = []
    for i, layer in enumerate(model.layers):
        x = x @ layer.weights + layer.bias
        if layer.activation == "relu":
            x = np.maximum(x, 0.0)
        if not np.all(np.isfinite(x)):
            raise ValueError(f"non-finite value in layer {i} output")
        outputs.append(x)
    return LayerTrace(outputs)


def decide(output) -> int:
    """Argmax class index; ties go to the lowest index."""
    scores = np.asarray(output, dtype=np.float64)
    if scores.ndim != 1:
        raise ValueError("decide expects a 1-D score vector")
    return int(np.argmax(scores))


def layer_gradient(model: ModelSpec, inputs, layer: int, class_index: int) \
        -> np.ndarray:
    """Gradient of output score ``class_index`` w.r.t. layer ``layer``'s
    post-ReLU outputs, by reverse-mode differentiation.

    The ReLU subgradient at exactly zero is taken as zero, consistent with
    zero activations counting as suppressed.
    """
    _check_gradient_args(model, layer, class_index)
    trace = forward(model, inputs)
    return gradient_from_activations(
        model, trace.outputs[layer], layer, class_index)


def gradient_from_activations(
        model: ModelSpec, activations, layer: int, class_index: int) \
        -> np.ndarray:
    """Same as :func:`layer_gradient`, but starting from a recorded
    activation vector of the monitored layer instead of a network input.

    The downstream layers fully determine this gradient, so a stored trace
    is as good as the original input.
    """
    _check_gradient_args(model, layer, class_index)
    acts = np.asarray(activations, dtype=np.float64)
    if acts.shape != (model.layer_width(layer),):
        raise ValueError(
            f"activation width {acts.shape} does not match layer "
            f"{layer} width {model.layer_width(layer)}")
    # forward through the remaining layers, keeping pre-activations
    pre = []
    x = acts
    for lyr in model.layers[layer + 1:]:
        z = x @ lyr.weights + lyr.bias
        pre.append(z)
        x = np.maximum(z, 0.0) if lyr.activation == "relu" else z
    grad = np.zeros(model.class_count)
    grad[class_index] = 1.0
    for lyr, z in zip(reversed(model.layers[layer + 1:]), reversed(pre)):
        if lyr.activation == "relu":
            grad = grad * (z > 0.0)
        grad = lyr.weights @ grad
    return grad


def _check_gradient_args(model: ModelSpec, layer: int, class_index: int):
    if not model.is_relu_layer(layer):
        raise ValueError(f"layer {layer} is not a ReLU layer")
    if not 0 <= class_index < model.class_count:
        raise ValueError(f"class index {class_index} out of range")


# -- toy training -----------------------------------------------------------


def make_blobs(n_classes: int = 3, per_class: int = 500, seed: int = 0,
               offset: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Isotropic Gaussian blobs in the plane, one blob per class.

    Class means sit on a circle of radius ``BLOB_RADIUS`` with standard
    deviation ``BLOB_STD``, so the classes are linearly separable by
    construction.  ``offset`` translates every sample by that distance
    along the diagonal, which is how the shifted evaluation sets used in
    the distribution-shift experiments are produced.
    """
    rng = np.random.default_rng(seed)
    angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
    means = BLOB_RADIUS * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    xs, ys = [], []
    for c in range(n_classes):
        xs.append(means[c] + BLOB_STD * rng.standard_normal((per_class, 2)))
        ys.append(np.full(per_class, c, dtype=np.int64))
    x = np.concatenate(xs)
    if offset:
        x = x + offset * np.array([1.0, 1.0]) / np.sqrt(2.0)
    return x, np.concatenate(ys)


def train_toy(inputs, labels, hidden: tuple[int, ...] = (16, 14),
              seed: int = 0, epochs: int = 40, learning_rate: float = 0.1,
              batch_size: int = 32) -> ModelSpec:
    """Train a small ReLU classifier with plain minibatch SGD.

    Deterministic for a given seed: initialization and shuffling share one
    generator.  With ``epochs=0`` the freshly initialized model is returned
    untouched.  Raises ``ValueError`` if the loss diverges to NaN/inf.
    """
    x = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[0] != y.shape[0]:
        raise ValueError("dataset must be nonempty with matching labels")
    n_classes = int(y.max()) + 1
    if n_classes < 2:
        raise ValueError("need at least 2 classes")

    rng = np.random.default_rng(seed)
    dims = (x.shape[1],) + tuple(hidden) + (n_classes,)
    weights = [rng.normal(0.0, np.sqrt(2.0 / dims[i]), (dims[i], dims[i + 1]))
               for i in range(len(dims) - 1)]
    biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]

    n = x.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            xb, yb = x[idx], y[idx]
            # divergence shows up as non-finite loss below, so the
            # intermediate overflow warnings carry no extra information
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                acts = [xb]
                pre = []
                for i, (w, b) in enumerate(zip(weights, biases)):
                    z = acts[-1] @ w + b
                    pre.append(z)
                    acts.append(
                        np.maximum(z, 0.0) if i < len(weights) - 1 else z)
                logits = acts[-1]
                shifted = logits - logits.max(axis=1, keepdims=True)
                probs = np.exp(shifted)
                probs /= probs.sum(axis=1, keepdims=True)
                loss = -np.mean(np.log(probs[np.arange(len(yb)), yb]))
                if not np.isfinite(loss):
                    raise ValueError("training diverged (non-finite loss)")
                delta = probs
                delta[np.arange(len(yb)), yb] -= 1.0
                delta /= len(yb)
                for i in range(len(weights) - 1, -1, -1):
                    grad_w = acts[i].T @ delta
                    grad_b = delta.sum(axis=0)
                    if i > 0:
                        delta = (delta @ weights[i].T) * (pre[i - 1] > 0.0)
                    weights[i] -= learning_rate * grad_w
                    biases[i] -= learning_rate * grad_b

    layers = [Layer(w, b, "relu") for w, b in zip(weights[:-1], biases[:-1])]
    layers.append(Layer(weights[-1], biases[-1], "none"))
    metadata = {
        "trainer": "minibatch-sgd",
        "seed": seed,
        "epochs": epochs,
        "learning_rate": learning_rate,
        "batch_size": batch_size,
        "hidden": list(hidden),
    }
    return ModelSpec(layers, metadata)


def evaluate_accuracy(model: ModelSpec, inputs, labels) -> float:
    """Fraction of samples whose argmax decision matches the label."""
    x = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    hits = sum(decide(forward(model, row).final) == int(label)
               for row, label in zip(x, y))
    return hits / len(y)


# -- model files -------------------------------------------------------------


def save_model(model: ModelSpec, path) -> None:
    """Write the model as versioned JSON with full-precision floats."""
    payload = {
        "version": MODEL_VERSION,
        "layers": [
            {
                "weights": layer.weights.tolist(),
                "bias": layer.bias.tolist(),
                "activation": layer.activation,
            }
            for layer in model.layers
        ],
        "metadata": model.metadata,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, separators=(",", ":"), sort_keys=False)
        fh.write("\n")


def load_model(path) -> ModelSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaError("model file must hold a JSON object")
    version = payload.get("version")
    if version != MODEL_VERSION:
        raise FormatVersionError(f"unsupported model version {version!r}")
    if "layers" not in payload or not isinstance(payload["layers"], list):
        raise SchemaError("model file is missing the layers list")
    try:
        layers = [
            Layer(np.asarray(entry["weights"], dtype=np.float64),
                  np.asarray(entry["bias"], dtype=np.float64),
                  entry["activation"])
            for entry in payload["layers"]
        ]
        return ModelSpec(layers, payload.get("metadata", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed model file: {exc}") from exc
