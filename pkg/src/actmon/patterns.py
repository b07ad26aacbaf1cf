"""Activation patterns, Hamming distance and monitored-neuron selection.

A pattern is a fixed-width tuple of 0/1 ints: bit ``i`` says whether the
``i``-th *monitored* neuron produced a strictly positive output.  Which
neurons are monitored, and in which order they map to pattern bits (and
hence BDD variables), is captured by a :class:`NeuronSelection`.

Neuron choice is driven by gradient magnitudes: neurons whose output most
influences the score of the class of interest are ranked first.  In the
common setup where the monitored layer feeds a linear output layer, those
magnitudes are exactly the absolute connecting weights and do not depend
on any sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .network import ModelSpec, forward, gradient_from_activations
from .traces import TraceRecord

Pattern = tuple[int, ...]


@dataclass(frozen=True)
class NeuronSelection:
    """Ordered subset of one layer's neurons to monitor.

    ``indices[i]`` is the neuron behind pattern bit / BDD variable ``i``;
    the list order therefore fixes the variable order of every zone built
    from this selection.  ``scores`` holds the importance magnitude of each
    selected neuron (zeros when the selection was not score-based).
    """

    layer: int
    layer_width: int
    indices: tuple[int, ...]
    scores: tuple[float, ...]

    def __post_init__(self):
        if self.layer_width < 1:
            raise ValueError("layer width must be >= 1")
        if not self.indices:
            raise ValueError("selection must keep at least one neuron")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("duplicate neuron indices in selection")
        if any(not 0 <= i < self.layer_width for i in self.indices):
            raise ValueError("neuron index outside the monitored layer")
        if len(self.scores) != len(self.indices):
            raise ValueError("scores and indices must align")

    @property
    def width(self) -> int:
        """Pattern width = number of monitored neurons."""
        return len(self.indices)


def identity_selection(layer_width: int, layer: int = 0) -> NeuronSelection:
    """Monitor every neuron of the layer in natural order."""
    return NeuronSelection(
        layer=layer,
        layer_width=layer_width,
        indices=tuple(range(layer_width)),
        scores=(0.0,) * layer_width,
    )


def binarize(activations, selection: NeuronSelection) -> Pattern:
    """Project a full-width activation vector onto the monitored neurons
    and threshold: bit ``i`` is 1 iff the selected neuron's output is
    strictly positive.  An exact zero counts as suppressed.
    """
    acts = np.asarray(activations, dtype=np.float64)
    if acts.shape != (selection.layer_width,):
        raise ValueError(
            f"activation width {acts.shape} does not match monitored layer "
            f"width {selection.layer_width}")
    if not np.all(np.isfinite(acts)):
        raise ValueError("non-finite activation value")
    return tuple(1 if acts[i] > 0.0 else 0 for i in selection.indices)


def hamming(p: Sequence[int], q: Sequence[int]) -> int:
    """Number of differing bit positions between equal-width patterns."""
    if len(p) != len(q):
        raise ValueError(f"pattern widths differ: {len(p)} vs {len(q)}")
    return sum(a != b for a, b in zip(p, q))


def score_neurons(model: ModelSpec, samples, layer: int, class_index: int) \
        -> np.ndarray:
    """Importance score of every neuron in ``layer`` for ``class_index``.

    Scores are mean absolute gradients of the class output score with
    respect to the layer's post-ReLU outputs.  ``samples`` may be trace
    records (their stored activations are used; records of other classes
    are ignored, and correctly classified ones are preferred) or raw
    network inputs (all are used as given).

    When ``layer`` feeds straight into the linear output layer, the
    gradient is the connecting weight column, independent of any sample;
    that exact value is returned.
    """
    if not model.is_relu_layer(layer):
        raise ValueError(f"layer {layer} is not a ReLU layer")
    if not 0 <= class_index < model.class_count:
        raise ValueError(f"class index {class_index} out of range")
    samples = list(samples)
    if not samples:
        raise ValueError("empty sample set")

    if layer == len(model.layers) - 2:
        return np.abs(model.layers[-1].weights[:, class_index])

    if isinstance(samples[0], TraceRecord):
        of_class = [r for r in samples if r.true_label == class_index]
        if not of_class:
            raise ValueError(f"no samples of class {class_index}")
        correct = [r for r in of_class if r.pred_label == class_index]
        chosen = correct or of_class
        activations = [np.asarray(r.activations, float) for r in chosen]
    else:
        activations = [forward(model, row).outputs[layer] for row in samples]

    total = np.zeros(model.layer_width(layer))
    for acts in activations:
        total += np.abs(
            gradient_from_activations(model, acts, layer, class_index))
    return total / len(activations)


def select_top_fraction(scores, fraction: float, layer: int = 0) \
        -> NeuronSelection:
    """Keep the highest-scoring ``fraction`` of neurons (at least one).

    ``k = max(1, floor(fraction * len(scores)))``; ties break toward the
    lower neuron index.  The selection lists neurons by descending score
    (then ascending index), which fixes the BDD variable order.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size == 0:
        raise ValueError("scores must be a nonempty vector")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    # the epsilon undoes binary rounding of fractions like 2/3 so that
    # mathematically-integral products floor correctly
    k = max(1, math.floor(fraction * scores.size + 1e-9))
    ranked = sorted(range(scores.size), key=lambda i: (-scores[i], i))
    kept = ranked[:k]
    return NeuronSelection(
        layer=layer,
        layer_width=int(scores.size),
        indices=tuple(kept),
        scores=tuple(float(scores[i]) for i in kept),
    )
