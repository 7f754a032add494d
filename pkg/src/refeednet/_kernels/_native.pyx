# Compiled kernels. Semantics must match _reference.py exactly: NCHW float64,
# valid/zero-padded convolution, max pooling with first-cell tie break.
#
# Convolution loops are ordered so the innermost loop walks the output row
# contiguously with a hoisted weight scalar; for stride 1 (the hot case) the
# input access is unit-stride too, which lets the compiler vectorize.

import numpy as np

cimport numpy as cnp

cnp.import_array()


def conv2d_forward(x, w, b, int stride, int pad):
    x = np.ascontiguousarray(x, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], ci = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t co = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t ho = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t wo = (wd + 2 * pad - kw) // stride + 1
    if ho < 1 or wo < 1:
        raise ValueError("convolution output would be empty")
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    y = np.empty((n, co, ho, wo), dtype=np.float64)

    cdef double[:, :, :, ::1] xv = xp
    cdef double[:, :, :, ::1] wv = w
    cdef double[::1] bv = b
    cdef double[:, :, :, ::1] yv = y
    cdef Py_ssize_t im, f, i, j, c, u, v
    cdef double wval, bias
    cdef const double* xrow
    cdef double* yrow

    for im in range(n):
        for f in range(co):
            bias = bv[f]
            for i in range(ho):
                yrow = &yv[im, f, i, 0]
                for j in range(wo):
                    yrow[j] = bias
            for c in range(ci):
                for u in range(kh):
                    for v in range(kw):
                        wval = wv[f, c, u, v]
                        for i in range(ho):
                            xrow = &xv[im, c, i * stride + u, v]
                            yrow = &yv[im, f, i, 0]
                            if stride == 1:
                                for j in range(wo):
                                    yrow[j] += wval * xrow[j]
                            else:
                                for j in range(wo):
                                    yrow[j] += wval * xrow[j * stride]
    return y


def conv2d_backward(x, w, dy, int stride, int pad):
    x = np.ascontiguousarray(x, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    dy = np.ascontiguousarray(dy, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], ci = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t co = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t ho = dy.shape[2], wo = dy.shape[3]
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    db = dy.sum(axis=(0, 2, 3))

    cdef double[:, :, :, ::1] xv = xp
    cdef double[:, :, :, ::1] wv = w
    cdef double[:, :, :, ::1] dyv = dy
    cdef double[:, :, :, ::1] dxv = dxp
    cdef double[:, :, :, ::1] dwv = dw
    cdef Py_ssize_t im, f, i, j, c, u, v
    cdef double wval, acc
    cdef const double* xrow
    cdef const double* dyrow
    cdef double* dxrow

    for im in range(n):
        for f in range(co):
            for c in range(ci):
                for u in range(kh):
                    for v in range(kw):
                        wval = wv[f, c, u, v]
                        acc = 0.0
                        for i in range(ho):
                            xrow = &xv[im, c, i * stride + u, v]
                            dxrow = &dxv[im, c, i * stride + u, v]
                            dyrow = &dyv[im, f, i, 0]
                            if stride == 1:
                                for j in range(wo):
                                    acc += dyrow[j] * xrow[j]
                                    dxrow[j] += dyrow[j] * wval
                            else:
                                for j in range(wo):
                                    acc += dyrow[j] * xrow[j * stride]
                                    dxrow[j * stride] += dyrow[j] * wval
                        dwv[f, c, u, v] += acc
    if pad:
        dxp = dxp[:, :, pad:h + pad, pad:wd + pad]
    return np.ascontiguousarray(dxp), dw, db


def maxpool2d_forward(x, int window, int stride):
    x = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t ho = (h - window) // stride + 1
    cdef Py_ssize_t wo = (w - window) // stride + 1
    if ho < 1 or wo < 1:
        raise ValueError("pool output would be empty")
    y = np.empty((n, c, ho, wo), dtype=np.float64)
    switches = np.empty((n, c, ho, wo), dtype=np.int64)

    cdef double[:, :, :, ::1] xv = x
    cdef double[:, :, :, ::1] yv = y
    cdef cnp.int64_t[:, :, :, ::1] sv = switches
    cdef Py_ssize_t im, ch, i, j, u, v, bi, bj
    cdef double best, cur

    for im in range(n):
        for ch in range(c):
            for i in range(ho):
                for j in range(wo):
                    best = xv[im, ch, i * stride, j * stride]
                    bi = i * stride
                    bj = j * stride
                    for u in range(window):
                        for v in range(window):
                            cur = xv[im, ch, i * stride + u, j * stride + v]
                            if cur > best:
                                best = cur
                                bi = i * stride + u
                                bj = j * stride + v
                    yv[im, ch, i, j] = best
                    sv[im, ch, i, j] = bi * w + bj
    return y, switches


def maxpool2d_backward(dy, switches, Py_ssize_t h, Py_ssize_t w):
    dy = np.ascontiguousarray(dy, dtype=np.float64)
    switches = np.ascontiguousarray(switches, dtype=np.int64)
    cdef Py_ssize_t n = dy.shape[0], c = dy.shape[1], ho = dy.shape[2], wo = dy.shape[3]
    dx = np.zeros((n, c, h * w), dtype=np.float64)

    cdef double[:, :, :, ::1] dyv = dy
    cdef cnp.int64_t[:, :, :, ::1] sv = switches
    cdef double[:, :, ::1] dxv = dx
    cdef Py_ssize_t im, ch, i, j

    for im in range(n):
        for ch in range(c):
            for i in range(ho):
                for j in range(wo):
                    dxv[im, ch, sv[im, ch, i, j]] += dyv[im, ch, i, j]
    return dx.reshape(n, c, h, w)
