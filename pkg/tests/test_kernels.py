"""Kernel-level checks against brute-force oracles.

The oracles below are deliberately naive (quadruple loops) and independent of
the im2col / compiled paths they verify.
"""

import numpy as np
import pytest

from refeednet import _kernels
from refeednet._kernels import _reference as ref


def conv2d_bruteforce(x, w, b, stride, pad):
    n, ci, h, wd = x.shape
    co, _, kh, kw = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    y = np.zeros((n, co, ho, wo))
    for im in range(n):
        for f in range(co):
            for i in range(ho):
                for j in range(wo):
                    patch = xp[im, :, i * stride:i * stride + kh, j * stride:j * stride + kw]
                    y[im, f, i, j] = np.sum(patch * w[f]) + b[f]
    return y


def maxpool_bruteforce(x, window, stride):
    n, c, h, w = x.shape
    ho = (h - window) // stride + 1
    wo = (w - window) // stride + 1
    y = np.zeros((n, c, ho, wo))
    for im in range(n):
        for ch in range(c):
            for i in range(ho):
                for j in range(wo):
                    y[im, ch, i, j] = x[im, ch, i * stride:i * stride + window,
                                        j * stride:j * stride + window].max()
    return y


CONV_CASES = [
    # (n, ci, h, w, co, kh, kw, stride, pad)
    (2, 1, 8, 8, 3, 3, 3, 1, 0),
    (1, 2, 9, 7, 4, 3, 3, 1, 1),
    (3, 3, 10, 10, 2, 5, 5, 2, 2),
    (2, 2, 8, 8, 3, 2, 4, 2, 0),
    (1, 1, 5, 5, 1, 1, 1, 1, 0),
]


@pytest.mark.parametrize("case", CONV_CASES)
def test_conv2d_forward_matches_bruteforce(case):
    n, ci, h, w, co, kh, kw, stride, pad = case
    rng = np.random.default_rng(hash(case) % 2**32)
    x = rng.standard_normal((n, ci, h, w))
    wt = rng.standard_normal((co, ci, kh, kw))
    b = rng.standard_normal(co)
    got = ref.conv2d_forward(x, wt, b, stride, pad)
    want = conv2d_bruteforce(x, wt, b, stride, pad)
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("case", CONV_CASES)
def test_conv2d_backward_matches_finite_differences(case):
    n, ci, h, w, co, kh, kw, stride, pad = case
    rng = np.random.default_rng(hash(case) % 2**31)
    x = rng.standard_normal((n, ci, h, w))
    wt = rng.standard_normal((co, ci, kh, kw)) * 0.5
    b = rng.standard_normal(co) * 0.5
    y = ref.conv2d_forward(x, wt, b, stride, pad)
    # scalar objective L = sum(y * g) so dL/dy = g
    g = rng.standard_normal(y.shape)
    dx, dw, db = ref.conv2d_backward(x, wt, g, stride, pad)

    eps = 1e-6

    def loss(xv, wv, bv):
        return np.sum(ref.conv2d_forward(xv, wv, bv, stride, pad) * g)

    for arr, grad in ((x, dx), (wt, dw), (b, db)):
        flat = arr.reshape(-1)
        idxs = rng.choice(flat.size, size=min(flat.size, 12), replace=False)
        for k in idxs:
            orig = flat[k]
            flat[k] = orig + eps
            up = loss(x, wt, b)
            flat[k] = orig - eps
            dn = loss(x, wt, b)
            flat[k] = orig
            num = (up - dn) / (2 * eps)
            np.testing.assert_allclose(grad.reshape(-1)[k], num, rtol=1e-5, atol=1e-6)


POOL_CASES = [
    (2, 3, 8, 8, 2, 2),
    (1, 1, 9, 9, 3, 3),
    (2, 2, 7, 7, 2, 1),  # overlapping windows
    (1, 4, 13, 13, 2, 2),  # odd size, trailing row/col dropped
]


@pytest.mark.parametrize("case", POOL_CASES)
def test_maxpool_forward_matches_bruteforce(case):
    n, c, h, w, window, stride = case
    rng = np.random.default_rng(hash(case) % 2**32)
    x = rng.standard_normal((n, c, h, w))
    y, switches = ref.maxpool2d_forward(x, window, stride)
    np.testing.assert_array_equal(y, maxpool_bruteforce(x, window, stride))
    # switches address the argmax: gather must reproduce y exactly
    n_i = np.arange(n)[:, None, None, None]
    c_i = np.arange(c)[None, :, None, None]
    np.testing.assert_array_equal(x.reshape(n, c, h * w)[n_i, c_i, switches], y)


@pytest.mark.parametrize("case", POOL_CASES)
def test_maxpool_backward_scatters_to_argmax(case):
    n, c, h, w, window, stride = case
    rng = np.random.default_rng(hash(case) % 2**30)
    x = rng.standard_normal((n, c, h, w))
    y, switches = ref.maxpool2d_forward(x, window, stride)
    dy = rng.standard_normal(y.shape)
    dx = ref.maxpool2d_backward(dy, switches, h, w)
    assert dx.shape == x.shape
    # total gradient mass is conserved
    np.testing.assert_allclose(dx.sum(), dy.sum(), rtol=1e-12)
    # finite differences on a handful of input entries
    eps = 1e-7

    def loss(xv):
        yv, _ = ref.maxpool2d_forward(xv, window, stride)
        return np.sum(yv * dy)

    flat = x.reshape(-1)
    idxs = rng.choice(flat.size, size=12, replace=False)
    for k in idxs:
        orig = flat[k]
        flat[k] = orig + eps
        up = loss(x)
        flat[k] = orig - eps
        dn = loss(x)
        flat[k] = orig
        num = (up - dn) / (2 * eps)
        np.testing.assert_allclose(dx.reshape(-1)[k], num, rtol=1e-5, atol=1e-7)


def test_maxpool_tie_breaks_to_first_window_position():
    x = np.zeros((1, 1, 2, 2))
    _, switches = ref.maxpool2d_forward(x, 2, 2)
    assert switches[0, 0, 0, 0] == 0


def test_backend_selection_reports_implementation():
    assert _kernels.IMPL in ("cython", "python")


@pytest.mark.skipif(_kernels.IMPL != "cython", reason="compiled backend not built")
class TestCompiledAgreesWithReference:
    def test_conv_forward_and_backward(self):
        from refeednet._kernels import _native as nat

        rng = np.random.default_rng(7)
        x = rng.standard_normal((3, 2, 12, 11))
        w = rng.standard_normal((5, 2, 3, 3))
        b = rng.standard_normal(5)
        for stride, pad in [(1, 0), (1, 1), (2, 1), (2, 0)]:
            yr = ref.conv2d_forward(x, w, b, stride, pad)
            yn = nat.conv2d_forward(x, w, b, stride, pad)
            np.testing.assert_allclose(yn, yr, rtol=1e-10, atol=1e-12)
            dy = rng.standard_normal(yr.shape)
            for gr, gn in zip(ref.conv2d_backward(x, w, dy, stride, pad),
                              nat.conv2d_backward(x, w, dy, stride, pad)):
                np.testing.assert_allclose(gn, gr, rtol=1e-10, atol=1e-12)

    def test_maxpool_bitwise(self):
        from refeednet._kernels import _native as nat

        rng = np.random.default_rng(8)
        x = rng.standard_normal((2, 3, 9, 9))
        for window, stride in [(2, 2), (3, 3), (2, 1)]:
            yr, sr = ref.maxpool2d_forward(x, window, stride)
            yn, sn = nat.maxpool2d_forward(x, window, stride)
            np.testing.assert_array_equal(yn, yr)
            np.testing.assert_array_equal(sn, sr)
            dy = rng.standard_normal(yr.shape)
            np.testing.assert_array_equal(
                nat.maxpool2d_backward(dy, sn, 9, 9),
                ref.maxpool2d_backward(dy, sr, 9, 9),
            )
