"""Numpy building blocks for the toy fully convolutional net.

Every layer comes as an explicit forward/backward pair so each one can be
finite-difference checked in isolation. Convolutions are stride-1 with
"same" zero padding; pooling is 2x2 max with stride 2; upsampling is a
stride-2 transposed convolution over a replicate-padded input, center
cropped back to twice the input size (so a constant map stays constant all
the way to the border).
"""

from __future__ import annotations

import numpy as np


def conv2d_forward(x, w, b):
    """x (n, cin, h, w), w (cout, cin, kh, kw) with odd kh/kw, b (cout,)."""
    kh, kw = w.shape[2:]
    ph, pw = kh // 2, kw // 2
    n, cin, h, wd = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw))) if ph or pw else x
    out = np.zeros((n, w.shape[0], h, wd))
    for u in range(kh):
        for v in range(kw):
            out += np.einsum("bchw,oc->bohw", xp[:, :, u : u + h, v : v + wd], w[:, :, u, v])
    return out + b[None, :, None, None]


def conv2d_backward(x, w, dout):
    kh, kw = w.shape[2:]
    ph, pw = kh // 2, kw // 2
    n, cin, h, wd = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw))) if ph or pw else x
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    for u in range(kh):
        for v in range(kw):
            patch = xp[:, :, u : u + h, v : v + wd]
            dw[:, :, u, v] = np.einsum("bchw,bohw->oc", patch, dout)
            dxp[:, :, u : u + h, v : v + wd] += np.einsum("bohw,oc->bchw", dout, w[:, :, u, v])
    dx = dxp[:, :, ph : ph + h, pw : pw + wd] if ph or pw else dxp
    return dx, dw, dout.sum(axis=(0, 2, 3))


def relu_forward(x):
    return np.maximum(x, 0.0)


def relu_backward(x, dout):
    return np.where(x > 0.0, dout, 0.0)


def maxpool2_forward(x):
    """2x2 max pooling, stride 2; ties go to the first window position."""
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"max pooling needs even spatial dims, got {h}x{w}")
    windows = (
        x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
    )
    idx = windows.argmax(axis=4)
    out = np.take_along_axis(windows, idx[..., None], axis=4)[..., 0]
    return out, idx


def maxpool2_backward(idx, x_shape, dout):
    n, c, h, w = x_shape
    dwin = np.zeros((n, c, h // 2, w // 2, 4))
    np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=4)
    return dwin.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w)


def bilinear_kernel2x(channels):
    """(channels, channels, 4, 4) transposed-conv weights that reproduce
    exact 2x bilinear interpolation, one identity-coupled kernel per channel."""
    taps = np.array([0.25, 0.75, 0.75, 0.25])
    kernel = np.outer(taps, taps)
    w = np.zeros((channels, channels, 4, 4))
    for c in range(channels):
        w[c, c] = kernel
    return w


def _replicate_pad(x):
    return np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)), mode="edge")


def upsample2x_forward(x, w):
    """Learnable 2x upsampling; w has shape (cin, cout, 4, 4)."""
    n, cin, h, wd = x.shape
    xp = _replicate_pad(x)
    hp, wp = h + 2, wd + 2
    full = np.zeros((n, w.shape[1], 2 * hp + 2, 2 * wp + 2))
    for u in range(4):
        for v in range(4):
            full[:, :, u : u + 2 * hp : 2, v : v + 2 * wp : 2] += np.einsum(
                "bchw,co->bohw", xp, w[:, :, u, v]
            )
    return full[:, :, 3 : 3 + 2 * h, 3 : 3 + 2 * wd]


def upsample2x_backward(x, w, dout):
    n, cin, h, wd = x.shape
    xp = _replicate_pad(x)
    hp, wp = h + 2, wd + 2
    dfull = np.zeros((n, w.shape[1], 2 * hp + 2, 2 * wp + 2))
    dfull[:, :, 3 : 3 + 2 * h, 3 : 3 + 2 * wd] = dout
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    for u in range(4):
        for v in range(4):
            patch = dfull[:, :, u : u + 2 * hp : 2, v : v + 2 * wp : 2]
            dw[:, :, u, v] = np.einsum("bchw,bohw->co", xp, patch)
            dxp += np.einsum("bohw,co->bchw", patch, w[:, :, u, v])
    # Fold the replicate-padding gradient back onto the border pixels.
    dx = dxp[:, :, 1:-1, 1:-1].copy()
    dx[:, :, 0, :] += dxp[:, :, 0, 1:-1]
    dx[:, :, -1, :] += dxp[:, :, -1, 1:-1]
    dx[:, :, :, 0] += dxp[:, :, 1:-1, 0]
    dx[:, :, :, -1] += dxp[:, :, 1:-1, -1]
    dx[:, :, 0, 0] += dxp[:, :, 0, 0]
    dx[:, :, 0, -1] += dxp[:, :, 0, -1]
    dx[:, :, -1, 0] += dxp[:, :, -1, 0]
    dx[:, :, -1, -1] += dxp[:, :, -1, -1]
    return dx, dw


def softmax_channels(z):
    """Per-pixel softmax over the channel axis of (n, c, h, w)."""
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
