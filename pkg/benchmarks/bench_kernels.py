"""Benchmark: compiled kernels vs the pure-numpy reference.

Times the convolution and pooling primitives on training-shaped workloads
plus one full forward/backward step of the default model, and reports the
speedup. Run from the repo root:

    python benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from refeednet._kernels import _reference

try:
    from refeednet._kernels import _native
except ImportError:
    _native = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


CASES = [
    # name, (n, ci, h, w, co, kh, kw, stride, pad)
    ("conv 10x1x32x32 -> 8ch 3x3", (10, 1, 32, 32, 8, 3, 3, 1, 1)),
    ("conv 10x8x16x16 -> 16ch 3x3", (10, 8, 16, 16, 16, 3, 3, 1, 1)),
    ("conv 128x1x32x32 -> 8ch 3x3", (128, 1, 32, 32, 8, 3, 3, 1, 1)),
]

POOL_CASES = [
    ("pool 10x8x32x32 2x2", (10, 8, 32, 32, 2, 2)),
    ("pool 128x16x16x16 2x2", (128, 16, 16, 16, 2, 2)),
]


def bench_conv(impl, case, repeats):
    n, ci, h, w, co, kh, kw, stride, pad = case
    rng = np.random.default_rng(0)
    x = rng.standard_normal((n, ci, h, w))
    wt = rng.standard_normal((co, ci, kh, kw))
    b = rng.standard_normal(co)
    y = impl.conv2d_forward(x, wt, b, stride, pad)
    dy = rng.standard_normal(y.shape)
    fwd = timeit(lambda: impl.conv2d_forward(x, wt, b, stride, pad), repeats)
    bwd = timeit(lambda: impl.conv2d_backward(x, wt, dy, stride, pad), repeats)
    return fwd, bwd


def bench_pool(impl, case, repeats):
    name, (n, c, h, w, window, stride) = case[0], case[1]
    rng = np.random.default_rng(1)
    x = rng.standard_normal((n, c, h, w))
    y, switches = impl.maxpool2d_forward(x, window, stride)
    dy = rng.standard_normal(y.shape)
    fwd = timeit(lambda: impl.maxpool2d_forward(x, window, stride), repeats)
    bwd = timeit(lambda: impl.maxpool2d_backward(dy, switches, h, w), repeats)
    return fwd, bwd


def bench_training_step(backend_name, repeats):
    import os

    os.environ["REFEEDNET_KERNELS"] = backend_name
    # force re-selection in a subprocess-free way: rebind the module funcs
    import importlib

    import refeednet._kernels as kernels

    importlib.reload(kernels)
    import refeednet.micronet.layers as layers

    importlib.reload(layers)
    import refeednet.micronet.model as model_mod

    importlib.reload(model_mod)

    from refeednet.micronet.model import default_micro_cnn, loss_and_gradients_arrays, sgd_step

    rng = np.random.default_rng(2)
    model = default_micro_cnn(seed=0)
    x = rng.uniform(0, 1, (10, 1, 32, 32)) - 0.5
    labels = rng.integers(0, 4, 10)

    def step():
        _, _, grads = loss_and_gradients_arrays(model, x, labels)
        sgd_step(model, grads, 0.05)

    step()
    return timeit(step, repeats)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    if _native is None:
        print("compiled backend not built; run `pip install -e .` first")

    header = f"{'case':36s} {'python':>10s} {'cython':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for name, case in CASES:
        rf, rb = bench_conv(_reference, case, args.repeats)
        if _native is not None:
            nf, nb = bench_conv(_native, case, args.repeats)
            print(f"{name + ' fwd':36s} {rf * 1e3:9.2f}ms {nf * 1e3:9.2f}ms {rf / nf:7.2f}x")
            print(f"{name + ' bwd':36s} {rb * 1e3:9.2f}ms {nb * 1e3:9.2f}ms {rb / nb:7.2f}x")
        else:
            print(f"{name + ' fwd':36s} {rf * 1e3:9.2f}ms {'-':>10s}")
    for name, shape in POOL_CASES:
        rf, rb = bench_pool(_reference, (name, shape), args.repeats)
        if _native is not None:
            nf, nb = bench_pool(_native, (name, shape), args.repeats)
            print(f"{name + ' fwd':36s} {rf * 1e3:9.2f}ms {nf * 1e3:9.2f}ms {rf / nf:7.2f}x")
            print(f"{name + ' bwd':36s} {rb * 1e3:9.2f}ms {nb * 1e3:9.2f}ms {rb / nb:7.2f}x")

    py_step = bench_training_step("python", args.repeats)
    print(f"{'full SGD step (batch 10), python':36s} {py_step * 1e3:9.2f}ms")
    if _native is not None:
        cy_step = bench_training_step("", args.repeats)
        print(f"{'full SGD step (batch 10), cython':36s} {cy_step * 1e3:9.2f}ms "
              f"({py_step / cy_step:.2f}x)")


if __name__ == "__main__":
    main()
