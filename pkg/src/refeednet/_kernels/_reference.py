"""Pure-numpy reference kernels (im2col convolution, strided max pooling).

Layout is NCHW float64 throughout. These are the fallback used when the
compiled extension is unavailable, and the ground truth the extension is
tested against.
"""

import numpy as np


def _check(x, name, ndim):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != ndim:
        raise ValueError(f"{name}: expected {ndim}-d array, got {x.ndim}-d")
    return x


def _conv_out_hw(h, w, kh, kw, stride, pad):
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (w + 2 * pad - kw) // stride + 1
    if ho < 1 or wo < 1:
        raise ValueError(f"convolution output would be empty: input {h}x{w}, "
                         f"kernel {kh}x{kw}, stride {stride}, pad {pad}")
    return ho, wo


def _im2col(x, kh, kw, stride, pad):
    """Return (cols, ho, wo) with cols shaped (N, Ho*Wo, C*kh*kw)."""
    n, c, h, w = x.shape
    ho, wo = _conv_out_hw(h, w, kh, kw, stride, pad)
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    s0, s1, s2, s3 = x.strides
    windows = np.lib.stride_tricks.as_strided(
        x,
        shape=(n, c, ho, wo, kh, kw),
        strides=(s0, s1, s2 * stride, s3 * stride, s2, s3),
        writeable=False,
    )
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n, ho * wo, c * kh * kw)
    return np.ascontiguousarray(cols), ho, wo


def conv2d_forward(x, w, b, stride, pad):
    """y[n,f,i,j] = sum_{c,u,v} x[n,c,i*s-p+u,j*s-p+v] * w[f,c,u,v] + b[f]"""
    x = _check(x, "x", 4)
    w = _check(w, "w", 4)
    b = np.ascontiguousarray(b, dtype=np.float64)
    n = x.shape[0]
    co, _, kh, kw = w.shape
    cols, ho, wo = _im2col(x, kh, kw, stride, pad)
    y = cols @ w.reshape(co, -1).T + b
    return np.ascontiguousarray(y.reshape(n, ho, wo, co).transpose(0, 3, 1, 2))


def conv2d_backward(x, w, dy, stride, pad):
    """Gradients of sum(conv2d_forward(x,w,b) * dy) w.r.t. x, w, b."""
    x = _check(x, "x", 4)
    w = _check(w, "w", 4)
    dy = _check(dy, "dy", 4)
    n, c, h, wd = x.shape
    co, _, kh, kw = w.shape
    cols, ho, wo = _im2col(x, kh, kw, stride, pad)

    dy2 = dy.transpose(0, 2, 3, 1).reshape(n * ho * wo, co)
    db = dy2.sum(axis=0)
    dw = (dy2.T @ cols.reshape(n * ho * wo, -1)).reshape(w.shape)

    dcols = (dy2 @ w.reshape(co, -1)).reshape(n, ho, wo, c, kh, kw)
    dcols = dcols.transpose(0, 3, 4, 5, 1, 2)  # (n, c, kh, kw, ho, wo)
    hp, wp = h + 2 * pad, wd + 2 * pad
    dxp = np.zeros((n, c, hp, wp))
    for u in range(kh):
        for v in range(kw):
            dxp[:, :, u:u + stride * ho:stride, v:v + stride * wo:stride] += dcols[:, :, u, v]
    if pad:
        dxp = dxp[:, :, pad:hp - pad, pad:wp - pad]
    return np.ascontiguousarray(dxp), dw, db


def maxpool2d_forward(x, window, stride):
    """Valid max pooling; returns (y, switches).

    switches[n,c,i,j] is the flat index (within H*W) of the selected input
    cell; ties resolve to the first cell in row-major window order.
    """
    x = _check(x, "x", 4)
    n, c, h, w = x.shape
    ho = (h - window) // stride + 1
    wo = (w - window) // stride + 1
    if ho < 1 or wo < 1:
        raise ValueError(f"pool output would be empty: input {h}x{w}, "
                         f"window {window}, stride {stride}")
    s0, s1, s2, s3 = x.strides
    win = np.lib.stride_tricks.as_strided(
        x,
        shape=(n, c, ho, wo, window, window),
        strides=(s0, s1, s2 * stride, s3 * stride, s2, s3),
        writeable=False,
    ).reshape(n, c, ho, wo, window * window)
    arg = win.argmax(axis=-1)
    y = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    u, v = arg // window, arg % window
    rows = np.arange(ho)[None, None, :, None] * stride + u
    cls = np.arange(wo)[None, None, None, :] * stride + v
    switches = rows * w + cls
    return np.ascontiguousarray(y), np.ascontiguousarray(switches, dtype=np.int64)


def maxpool2d_backward(dy, switches, h, w):
    """Scatter-add dy back to the argmax positions recorded in switches."""
    dy = _check(dy, "dy", 4)
    n, c = dy.shape[:2]
    dxf = np.zeros((n, c, h * w))
    n_i = np.arange(n)[:, None, None, None]
    c_i = np.arange(c)[None, :, None, None]
    np.add.at(dxf, (n_i, c_i, switches), dy)
    return dxf.reshape(n, c, h, w)
