"""Finite-difference gradient oracle shared by the unit and acceptance tests.

The oracle is independent of the backward pass: it only calls the forward
loss. Tolerances: relative 1e-4 with a 1e-7 absolute floor for entries that
are numerically zero (central differences with step 1e-5 carry ~1e-9 noise).
"""

import numpy as np

from refeednet.micronet import (
    Conv2D,
    Dense,
    Flatten,
    MaxPool2D,
    ReLU,
    Softmax,
    build_model,
    loss_and_gradients_arrays,
)

FD_STEP = 1e-5
RTOL = 1e-4
ATOL = 1e-7


def fd_loss(model, x, labels):
    loss, _, _ = loss_and_gradients_arrays(model, x, labels)
    return loss


def check_model_gradients(model, x, labels, rng, sample=48):
    """Compare analytic parameter gradients against central differences.

    Raises AssertionError on any entry outside tolerance. Large tensors are
    spot-checked on `sample` random entries; small ones exhaustively.
    """
    _, _, grads = loss_and_gradients_arrays(model, x, labels)
    for i, layer in model.parameter_layers():
        if layer.frozen:
            assert not grads[i]["weight"].any() and not grads[i]["bias"].any(), \
                f"frozen layer {i} must have zero-filled gradients"
            continue
        for name in ("weight", "bias"):
            arr = getattr(layer, name)
            analytic = grads[i][name].reshape(-1)
            flat = arr.reshape(-1)
            if flat.size <= 64:
                entries = np.arange(flat.size)
            else:
                entries = rng.choice(flat.size, size=sample, replace=False)
            for k in entries:
                orig = flat[k]
                flat[k] = orig + FD_STEP
                up = fd_loss(model, x, labels)
                flat[k] = orig - FD_STEP
                dn = fd_loss(model, x, labels)
                flat[k] = orig
                numeric = (up - dn) / (2 * FD_STEP)
                abs_err = abs(analytic[k] - numeric)
                denom = max(abs(analytic[k]), abs(numeric))
                rel_err = abs_err / denom if denom > 0 else 0.0
                assert abs_err <= ATOL + RTOL * denom, (
                    f"layer {i} ({layer.kind}.{name})[{k}]: "
                    f"analytic {analytic[k]:.3e} vs numeric {numeric:.3e} "
                    f"(abs {abs_err:.3e}, rel {rel_err:.3e})"
                )
    return True


def layer_kind_model(kind, seed):
    """A minimal Softmax-terminated model exercising the given layer kind."""
    in_shape = (8, 8, 1)
    if kind == "Conv2D":
        layers = [Conv2D(2, (3, 3), stride=1, padding=1), Flatten(), Dense(4), Softmax()]
    elif kind == "ReLU":
        layers = [Conv2D(2, (3, 3), stride=1, padding=0), ReLU(), Flatten(), Dense(4), Softmax()]
    elif kind == "MaxPool2D":
        layers = [Conv2D(2, (3, 3), stride=1, padding=1), ReLU(), MaxPool2D(2, 2),
                  Flatten(), Dense(4), Softmax()]
    elif kind == "Flatten":
        layers = [Conv2D(2, (3, 3), stride=2, padding=1), Flatten(), Dense(4), Softmax()]
    elif kind == "Dense":
        layers = [Flatten(), Dense(6), ReLU(), Dense(4), Softmax()]
    elif kind == "Softmax":
        layers = [Flatten(), Dense(4), Softmax()]
    else:
        raise ValueError(kind)
    return build_model(layers, input_shape=in_shape, seed=seed)


LAYER_KINDS = ("Conv2D", "ReLU", "MaxPool2D", "Flatten", "Dense", "Softmax")


def run_layer_kind_check(kind, seed):
    rng = np.random.default_rng(seed)
    model = layer_kind_model(kind, seed)
    x = rng.uniform(0.0, 1.0, size=(2, 1, 8, 8))
    labels = rng.integers(0, 4, size=2)
    return check_model_gradients(model, x, labels, rng)


def check_softmax_jacobian(seed):
    """Direct check of Softmax.backward (the training loss uses the fused
    softmax/cross-entropy form, so the layer's own Jacobian needs its own
    oracle): objective sum(softmax(z) * G) for random G."""
    rng = np.random.default_rng(seed)
    sm = Softmax()
    z = rng.standard_normal((3, 4))
    g = rng.standard_normal((3, 4))
    p, cache = sm.forward(z)
    dz, _ = sm.backward(g, cache, need_dx=True)
    for k in range(z.size):
        flat = z.reshape(-1)
        orig = flat[k]
        flat[k] = orig + FD_STEP
        up = float(np.sum(sm.forward(z)[0] * g))
        flat[k] = orig - FD_STEP
        dn = float(np.sum(sm.forward(z)[0] * g))
        flat[k] = orig
        numeric = (up - dn) / (2 * FD_STEP)
        analytic = dz.reshape(-1)[k]
        assert abs(analytic - numeric) <= ATOL + RTOL * max(abs(analytic), abs(numeric))
    return True
