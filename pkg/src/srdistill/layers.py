"""Differentiable layer primitives on NHWC batches: 3x3 conv, ReLU, pixel shuffle.

Each forward returns (output, ctx); the matching backward consumes ctx and
the upstream gradient.  Convolution is im2col + one BLAS matmul.  The NHWC
layout keeps the channel axis innermost, so im2col is nine nearly-contiguous
block copies and the output gradient reshapes without copying; everything is
deterministic for a fixed BLAS thread count.

Weights stay in (Cout, Cin, 3, 3) order, the layout checkpoints store.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError

_OFFSETS = tuple((di, dj) for di in range(3) for dj in range(3))


def _weight_matrix(w: np.ndarray) -> np.ndarray:
    # (Cout, Cin, 3, 3) -> (9*Cin, Cout) with rows ordered (di, dj, cin),
    # matching the im2col column order below.
    cout, cin = w.shape[:2]
    return np.ascontiguousarray(w.transpose(2, 3, 1, 0).reshape(9 * cin, cout))


def conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """3x3 convolution, stride 1, zero padding 1.

    x: (B, H, W, Cin); w: (Cout, Cin, 3, 3); b: (Cout,).
    Returns (y, ctx) with y of shape (B, H, W, Cout).
    """
    if x.ndim != 4:
        raise ShapeError(f"expected NHWC input, got shape {x.shape}")
    bsz, h, wd, cin = x.shape
    if cin != w.shape[1]:
        raise ShapeError(f"input has {cin} channels, kernel expects {w.shape[1]}")
    cout = w.shape[0]
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    cols = np.empty((bsz, h, wd, 9, cin), dtype=x.dtype)
    for k, (di, dj) in enumerate(_OFFSETS):
        cols[:, :, :, k, :] = xp[:, di : di + h, dj : dj + wd, :]
    cols = cols.reshape(bsz * h * wd, 9 * cin)
    wmat = _weight_matrix(w)
    y = cols @ wmat
    y += b
    return y.reshape(bsz, h, wd, cout), (cols, x.shape, wmat)


def conv2d_backward(ctx, dy: np.ndarray):
    """Gradients of conv2d; returns (dx, dw, db)."""
    cols, x_shape, wmat = ctx
    bsz, h, wd, cin = x_shape
    cout = wmat.shape[1]
    dyr = dy.reshape(bsz * h * wd, cout)
    dw = (cols.T @ dyr).reshape(3, 3, cin, cout).transpose(3, 2, 0, 1)
    db = dyr.sum(axis=0)
    dcols = (dyr @ wmat.T).reshape(bsz, h, wd, 9, cin)
    dxp = np.zeros((bsz, h + 2, wd + 2, cin), dtype=dy.dtype)
    for k, (di, dj) in enumerate(_OFFSETS):
        dxp[:, di : di + h, dj : dj + wd, :] += dcols[:, :, :, k, :]
    return dxp[:, 1:-1, 1:-1, :], np.ascontiguousarray(dw), db


def relu(x: np.ndarray):
    mask = x > 0
    return x * mask, mask


def relu_backward(mask: np.ndarray, dy: np.ndarray) -> np.ndarray:
    return dy * mask


def pixel_shuffle(x: np.ndarray, r: int):
    """Rearrange (B, H, W, C*r*r) -> (B, H*r, W*r, C), channel-major sub-pixels:
    output[b, h*r+i, w*r+j, c] = input[b, h, w, c*r*r + i*r + j]."""
    bsz, h, w, c = x.shape
    if c % (r * r):
        raise ShapeError(f"{c} channels not divisible by r^2 = {r * r}")
    co = c // (r * r)
    y = x.reshape(bsz, h, w, co, r, r).transpose(0, 1, 4, 2, 5, 3)
    return np.ascontiguousarray(y.reshape(bsz, h * r, w * r, co)), (x.shape, r)


def pixel_shuffle_backward(ctx, dy: np.ndarray) -> np.ndarray:
    (bsz, h, w, c), r = ctx
    co = c // (r * r)
    d = dy.reshape(bsz, h, r, w, r, co).transpose(0, 1, 3, 5, 2, 4)
    return np.ascontiguousarray(d.reshape(bsz, h, w, c))
