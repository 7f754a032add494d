"""The micro-CNN model: construction, forward pass, loss/gradients and
parameter updates.

Models behave as immutable values: sgd_step and freeze_base return new
MicroCnn instances, and frozen layers are shared by reference (which makes
the frozen-parameter bitwise guarantee structural).
"""

import numpy as np

from ..errors import (
    EmptyDatasetError,
    GradientShapeError,
    InputShapeError,
    ValidationError,
)
from .layers import Conv2D, Dense, Flatten, MaxPool2D, ReLU, Softmax, layer_from_description


class MicroCnn:
    """Ordered layers with a base/head boundary for transfer learning.

    Layers with index < base_boundary form the convolutional base; the rest
    are the classifier head. Head layers are never frozen.
    """

    def __init__(self, layers, base_boundary, input_shape, class_count=4, seed=0):
        self.layers = list(layers)
        self.base_boundary = base_boundary
        self.input_shape = tuple(input_shape)  # (H, W, C)
        self.class_count = class_count
        self.seed = seed
        self._validate()

    def _validate(self):
        if not 0 <= self.base_boundary <= len(self.layers):
            raise ValidationError(
                f"base_boundary {self.base_boundary} out of range for "
                f"{len(self.layers)} layers"
            )
        if not self.layers or self.layers[-1].kind != "Softmax":
            raise ValidationError("model must end with a Softmax layer")
        for i, layer in enumerate(self.layers[self.base_boundary:], self.base_boundary):
            if layer.frozen:
                raise ValidationError(f"head layer {i} ({layer.kind}) must not be frozen")
        h, w, c = self.input_shape
        shape = (c, h, w)
        for i, layer in enumerate(self.layers):
            shape = layer.out_shape(shape)
        if shape != (self.class_count,):
            raise ValidationError(
                f"model output shape {shape} does not match class count "
                f"({self.class_count},)"
            )

    def parameter_layers(self):
        return [(i, l) for i, l in enumerate(self.layers) if l.weight is not None]

    def base_layers(self):
        return self.layers[:self.base_boundary]

    def head_layers(self):
        return self.layers[self.base_boundary:]

    def describe(self):
        return {
            "input_shape": list(self.input_shape),
            "class_count": self.class_count,
            "base_boundary": self.base_boundary,
            "seed": self.seed,
            "layers": [l.describe() for l in self.layers],
        }

    def summary(self):
        parts = []
        for layer in self.layers:
            d = layer.describe()
            kind = d.pop("kind")
            d.pop("frozen", None)
            args = ",".join(f"{k}={v}" for k, v in d.items())
            parts.append(f"{kind}({args})" if args else kind)
        return " -> ".join(parts)


def build_model(layer_descriptions, input_shape=(32, 32, 1), base_boundary=None,
                class_count=4, seed=0):
    """Instantiate layers from descriptions and initialize parameters.

    Weights are uniform in +/- sqrt(6 / (fan_in + fan_out)) drawn from
    per-layer substreams of the given seed; biases start at zero.
    """
    layers = [layer_from_description(d) if isinstance(d, dict) else d
              for d in layer_descriptions]
    if base_boundary is None:
        base_boundary = len(layers)
    ss = np.random.SeedSequence(seed)
    children = iter(ss.spawn(len(layers)))
    h, w, c = input_shape
    shape = (c, h, w)
    for layer in layers:
        child = next(children)
        shape = layer.init(np.random.default_rng(child), shape)
    return MicroCnn(layers, base_boundary, input_shape, class_count, seed)


def default_micro_cnn(seed=0, input_shape=(32, 32, 1), variant="standard"):
    """The desk-scale backbone: two conv/pool stages and a small dense head.

    The head carries a hidden layer (Dense 64 + ReLU) on top of the flatten:
    a linear head alone cannot separate the traffic classes reliably at this
    scale. `wide` is an alternative backbone (more channels) used to compare
    a second model family under the same protocol.
    """
    if variant == "standard":
        c1, c2 = 8, 16
    elif variant == "wide":
        c1, c2 = 12, 24
    else:
        raise ValidationError(f"unknown variant {variant!r}")
    layers = [
        Conv2D(c1, (3, 3), stride=1, padding=1),
        ReLU(),
        MaxPool2D(2, 2),
        Conv2D(c2, (3, 3), stride=1, padding=1),
        ReLU(),
        MaxPool2D(2, 2),
        Flatten(),
        Dense(64),
        ReLU(),
        Dense(4),
        Softmax(),
    ]
    return build_model(layers, input_shape, base_boundary=7, class_count=4, seed=seed)


PIXEL_OFFSET = 0.5  # [0,1] pixels are centered before entering the network


def _to_nchw(images, input_shape):
    """Stack HWC images into a centered NCHW batch, checking shapes."""
    batch = []
    for px in images:
        px = np.asarray(px, dtype=np.float64)
        if px.ndim == 2:
            px = px[:, :, None]
        if tuple(px.shape) != tuple(input_shape):
            raise InputShapeError(
                f"image shape {px.shape} does not match model input {input_shape}"
            )
        batch.append(px.transpose(2, 0, 1))
    return np.stack(batch) - PIXEL_OFFSET


def forward_batch(model, x, want_caches=False, start=0):
    """Run a batch through layers[start:]; returns probabilities (N, K).

    `x` must be the activation entering layer `start` (the centered NCHW
    input when start == 0).
    """
    caches = [None] * start
    for layer in model.layers[start:]:
        x, cache = layer.forward(x)
        caches.append(cache)
    return (x, caches) if want_caches else x


def lowest_trainable_index(model):
    """Index of the first layer whose parameters receive gradients."""
    trainable = [i for i, l in enumerate(model.layers)
                 if l.weight is not None and not l.frozen]
    return min(trainable) if trainable else 0


def forward_prefix(model, x, stop, chunk=256):
    """Activations entering layer `stop`; layers[:stop] must be frozen or
    stateless, which makes the result reusable across SGD steps."""
    if stop == 0:
        return x
    outs = []
    for s in range(0, x.shape[0], chunk):
        z = x[s:s + chunk]
        for layer in model.layers[:stop]:
            z, _ = layer.forward(z)
        outs.append(z)
    return np.concatenate(outs, axis=0)


def forward(model, image):
    """Probability vector for one HWC image; deterministic per (model, input)."""
    x = _to_nchw([image], model.input_shape)
    return forward_batch(model, x)[0]


def _zero_grads_like(layer):
    return {"weight": np.zeros_like(layer.weight), "bias": np.zeros_like(layer.bias)}


def loss_and_gradients_arrays(model, x, labels, start=0):
    """Mean cross-entropy and per-layer gradients for an NCHW batch.

    Returns (loss, probs, grads) where grads is a list parallel to
    model.layers: None for parameterless layers, zero-filled dicts for
    frozen ones (documented choice: shapes stay aligned for sgd_step).
    `start` admits pre-computed activations from a frozen prefix.

    The Softmax/cross-entropy pair is differentiated jointly as
    (p - onehot)/N, which stays finite even for saturated probabilities;
    Softmax.backward is still exercised directly by the gradient tests.
    """
    n = x.shape[0]
    if n == 0:
        raise EmptyDatasetError("empty batch")
    if model.layers[-1].kind != "Softmax":
        raise ValidationError("loss expects a Softmax-terminated model")
    probs, caches = forward_batch(model, x, want_caches=True, start=start)
    rows = np.arange(n)
    p_true = probs[rows, labels]
    loss = float(-np.mean(np.log(np.maximum(p_true, np.finfo(float).tiny))))

    onehot = np.zeros_like(probs)
    onehot[rows, labels] = 1.0
    dy = (probs - onehot) / n

    lowest = max(lowest_trainable_index(model), start)
    if not any(l.weight is not None and not l.frozen for l in model.layers):
        lowest = len(model.layers)

    grads = [None] * len(model.layers)
    # skip the Softmax layer itself: dy is already d(loss)/d(logits)
    for i in range(len(model.layers) - 2, -1, -1):
        layer = model.layers[i]
        if i < lowest:
            break
        need_dx = i > lowest
        dy, g = layer.backward(dy, caches[i], need_dx)
        if g is not None:
            grads[i] = g
    for i, layer in enumerate(model.layers):
        if layer.weight is not None and grads[i] is None:
            grads[i] = _zero_grads_like(layer)
    if not np.isfinite(loss):
        raise ValidationError("non-finite loss; training diverged")
    return loss, probs, grads


def loss_and_gradients(model, batch):
    """Spec-facing wrapper over a batch of LabeledImage-like items."""
    items = list(batch)
    if not items:
        raise EmptyDatasetError("empty batch")
    x = _to_nchw([it.pixels for it in items], model.input_shape)
    labels = np.array([int(it.label) for it in items])
    if labels.min() < 0 or labels.max() >= model.class_count:
        raise ValidationError("labels must lie in range(class_count)")
    loss, _, grads = loss_and_gradients_arrays(model, x, labels)
    return loss, grads


def sgd_step(model, grads, learning_rate):
    """p := p - lr * grad(p) for non-frozen parameters; frozen layers are
    shared by reference so their parameters stay bitwise identical."""
    new_layers = []
    for layer, g in zip(model.layers, grads):
        if layer.weight is None or layer.frozen:
            new_layers.append(layer)
            continue
        if g is None:
            raise GradientShapeError(f"missing gradients for trainable {layer.kind}")
        if g["weight"].shape != layer.weight.shape or g["bias"].shape != layer.bias.shape:
            raise GradientShapeError(
                f"gradient shapes {g['weight'].shape}/{g['bias'].shape} do not match "
                f"parameters {layer.weight.shape}/{layer.bias.shape}"
            )
        new_layers.append(layer.clone(
            weight=layer.weight - learning_rate * g["weight"],
            bias=layer.bias - learning_rate * g["bias"],
        ))
    return MicroCnn(new_layers, model.base_boundary, model.input_shape,
                    model.class_count, model.seed)


def freeze_base(model):
    """Mark all parameterized layers below base_boundary as frozen."""
    new_layers = []
    for i, layer in enumerate(model.layers):
        if i < model.base_boundary and layer.weight is not None and not layer.frozen:
            new_layers.append(layer.clone(frozen=True))
        else:
            new_layers.append(layer)
    return MicroCnn(new_layers, model.base_boundary, model.input_shape,
                    model.class_count, model.seed)


def reinit_head(model, seed):
    """Fresh randomly initialized classifier head over the existing base."""
    ss = np.random.SeedSequence(seed)
    children = iter(ss.spawn(len(model.layers)))
    h, w, c = model.input_shape
    shape = (c, h, w)
    new_layers = []
    for i, layer in enumerate(model.layers):
        child = next(children)
        if i >= model.base_boundary and layer.weight is not None:
            layer = layer.clone()
            shape = layer.init(np.random.default_rng(child), shape)
        else:
            shape = layer.out_shape(shape)
            new_layers.append(layer)
            continue
        new_layers.append(layer)
    return MicroCnn(new_layers, model.base_boundary, model.input_shape,
                    model.class_count, model.seed)


def parameter_checksums(model):
    """Per-layer byte digests, used to prove frozen immutability."""
    import hashlib

    out = {}
    for i, layer in model.parameter_layers():
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(layer.weight).tobytes())
        h.update(np.ascontiguousarray(layer.bias).tobytes())
        out[i] = h.hexdigest()
    return out
