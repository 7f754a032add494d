"""Layer implementations for the micro-CNN.

Each layer exposes init(rng, in_shape) -> out_shape, forward(x) -> (y, cache)
and backward(dy, cache, need_dx) -> (dx | None, grads | None). Activations
flow as NCHW (or (N, F) after Flatten) float64 arrays. Caches are returned
rather than stored so layers stay read-only during inference.
"""

import numpy as np

from .. import _kernels
from ..errors import ValidationError


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Conv2D:
    kind = "Conv2D"

    def __init__(self, out_channels, kernel=(3, 3), stride=1, padding=0,
                 frozen=False, weight=None, bias=None):
        kh, kw = (kernel, kernel) if isinstance(kernel, int) else kernel
        if kh < 1 or kw < 1:
            raise ValidationError(f"kernel dimensions must be >= 1, got {kh}x{kw}")
        if stride < 1:
            raise ValidationError(f"stride must be >= 1, got {stride}")
        if padding < 0:
            raise ValidationError(f"padding must be >= 0, got {padding}")
        self.out_channels = out_channels
        self.kernel = (kh, kw)
        self.stride = stride
        self.padding = padding
        self.frozen = frozen
        self.weight = weight  # (Co, Ci, kh, kw)
        self.bias = bias      # (Co,)

    def init(self, rng, in_shape):
        c, h, w = in_shape
        kh, kw = self.kernel
        fan_in = c * kh * kw
        fan_out = self.out_channels * kh * kw
        self.weight = glorot_uniform(rng, (self.out_channels, c, kh, kw), fan_in, fan_out)
        self.bias = np.zeros(self.out_channels)
        return self.out_shape(in_shape)

    def out_shape(self, in_shape):
        c, h, w = in_shape
        kh, kw = self.kernel
        ho = (h + 2 * self.padding - kh) // self.stride + 1
        wo = (w + 2 * self.padding - kw) // self.stride + 1
        if ho < 1 or wo < 1:
            raise ValidationError(f"Conv2D output would be empty for input {in_shape}")
        return (self.out_channels, ho, wo)

    def forward(self, x):
        y = _kernels.conv2d_forward(x, self.weight, self.bias, self.stride, self.padding)
        return y, x

    def backward(self, dy, cache, need_dx):
        x = cache
        if self.frozen and not need_dx:
            return None, None
        dx, dw, db = _kernels.conv2d_backward(x, self.weight, dy, self.stride, self.padding)
        if self.frozen:
            return dx, None
        return (dx if need_dx else None), {"weight": dw, "bias": db}

    def clone(self, weight=None, bias=None, frozen=None):
        return Conv2D(self.out_channels, self.kernel, self.stride, self.padding,
                      frozen=self.frozen if frozen is None else frozen,
                      weight=self.weight if weight is None else weight,
                      bias=self.bias if bias is None else bias)

    def describe(self):
        return {"kind": self.kind, "out_channels": self.out_channels,
                "kernel": list(self.kernel), "stride": self.stride,
                "padding": self.padding, "frozen": self.frozen}


class ReLU:
    kind = "ReLU"
    frozen = False
    weight = bias = None

    def init(self, rng, in_shape):
        return in_shape

    def out_shape(self, in_shape):
        return in_shape

    def forward(self, x):
        return np.maximum(x, 0.0), x

    def backward(self, dy, cache, need_dx):
        if not need_dx:
            return None, None
        return dy * (cache > 0.0), None

    def clone(self, **_):
        return self

    def describe(self):
        return {"kind": self.kind}


class MaxPool2D:
    kind = "MaxPool2D"
    frozen = False
    weight = bias = None

    def __init__(self, window=2, stride=2):
        if window < 1 or stride < 1:
            raise ValidationError(f"window and stride must be >= 1, got {window}/{stride}")
        self.window = window
        self.stride = stride

    def init(self, rng, in_shape):
        return self.out_shape(in_shape)

    def out_shape(self, in_shape):
        c, h, w = in_shape
        ho = (h - self.window) // self.stride + 1
        wo = (w - self.window) // self.stride + 1
        if ho < 1 or wo < 1:
            raise ValidationError(f"MaxPool2D output would be empty for input {in_shape}")
        return (c, ho, wo)

    def forward(self, x):
        y, switches = _kernels.maxpool2d_forward(x, self.window, self.stride)
        return y, (switches, x.shape[2], x.shape[3])

    def backward(self, dy, cache, need_dx):
        if not need_dx:
            return None, None
        switches, h, w = cache
        return _kernels.maxpool2d_backward(dy, switches, h, w), None

    def clone(self, **_):
        return self

    def describe(self):
        return {"kind": self.kind, "window": self.window, "stride": self.stride}


class Flatten:
    kind = "Flatten"
    frozen = False
    weight = bias = None

    def init(self, rng, in_shape):
        return self.out_shape(in_shape)

    def out_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def forward(self, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dy, cache, need_dx):
        if not need_dx:
            return None, None
        return dy.reshape(cache), None

    def clone(self, **_):
        return self

    def describe(self):
        return {"kind": self.kind}


class Dense:
    kind = "Dense"

    def __init__(self, out_features, frozen=False, weight=None, bias=None):
        self.out_features = out_features
        self.frozen = frozen
        self.weight = weight  # (in, out)
        self.bias = bias      # (out,)

    def init(self, rng, in_shape):
        (fin,) = in_shape
        self.weight = glorot_uniform(rng, (fin, self.out_features), fin, self.out_features)
        self.bias = np.zeros(self.out_features)
        return (self.out_features,)

    def out_shape(self, in_shape):
        return (self.out_features,)

    def forward(self, x):
        return x @ self.weight + self.bias, x

    def backward(self, dy, cache, need_dx):
        x = cache
        if self.frozen and not need_dx:
            return None, None
        grads = None if self.frozen else {"weight": x.T @ dy, "bias": dy.sum(axis=0)}
        dx = dy @ self.weight.T if need_dx else None
        return dx, grads

    def clone(self, weight=None, bias=None, frozen=None):
        return Dense(self.out_features,
                     frozen=self.frozen if frozen is None else frozen,
                     weight=self.weight if weight is None else weight,
                     bias=self.bias if bias is None else bias)

    def describe(self):
        return {"kind": self.kind, "out_features": self.out_features, "frozen": self.frozen}


class Softmax:
    kind = "Softmax"
    frozen = False
    weight = bias = None

    def init(self, rng, in_shape):
        return in_shape

    def out_shape(self, in_shape):
        return in_shape

    def forward(self, x):
        z = x - x.max(axis=1, keepdims=True)
        e = np.exp(z)
        p = e / e.sum(axis=1, keepdims=True)
        return p, p

    def backward(self, dy, cache, need_dx):
        if not need_dx:
            return None, None
        p = cache
        return p * (dy - (dy * p).sum(axis=1, keepdims=True)), None

    def clone(self, **_):
        return self

    def describe(self):
        return {"kind": self.kind}


_LAYER_KINDS = {cls.kind: cls for cls in (Conv2D, ReLU, MaxPool2D, Flatten, Dense, Softmax)}


def layer_from_description(desc):
    kind = desc.get("kind")
    if kind not in _LAYER_KINDS:
        raise ValidationError(f"unknown layer kind {kind!r}")
    if kind == "Conv2D":
        return Conv2D(desc["out_channels"], tuple(desc["kernel"]), desc["stride"],
                      desc["padding"], frozen=desc["frozen"])
    if kind == "MaxPool2D":
        return MaxPool2D(desc["window"], desc["stride"])
    if kind == "Dense":
        return Dense(desc["out_features"], frozen=desc["frozen"])
    return _LAYER_KINDS[kind]()
