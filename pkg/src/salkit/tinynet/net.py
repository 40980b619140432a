"""The two-headed toy FCN: shared trunk, segmentation head, saliency head.

Trunk: conv3x3 -> ReLU -> 2x2 max pool -> conv3x3 -> ReLU -> conv3x3 -> ReLU.
Segmentation head: 1x1 conv to C channels, learnable 2x upsampling, per-pixel
softmax. Saliency head: 1x1 conv to one channel, learnable 2x upsampling,
sigmoid. Both heads emit maps at the input resolution; inputs must have even
spatial dims so the pool/upsample pair round-trips exactly.

Losses follow the two-task formulation: per-image-averaged, per-pixel-summed
cross entropy for segmentation, and squared error for saliency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import layers

LOG_EPS = 1e-12


@dataclass
class NetSpec:
    """Architecture knobs for the toy net."""

    in_channels: int = 3
    trunk_channels: tuple = (8, 12, 16)
    n_classes: int = 2


@dataclass
class TinyNetParams:
    """Named tensors for the shared trunk and the two task heads."""

    theta_s: dict = field(default_factory=dict)
    theta_h: dict = field(default_factory=dict)
    theta_f: dict = field(default_factory=dict)

    def head(self, which):
        if which == "seg":
            return self.theta_h
        if which == "sal":
            return self.theta_f
        raise ValueError(f"unknown head {which!r}; expected 'seg' or 'sal'")

    def copy(self):
        return TinyNetParams(
            theta_s={k: v.copy() for k, v in self.theta_s.items()},
            theta_h={k: v.copy() for k, v in self.theta_h.items()},
            theta_f={k: v.copy() for k, v in self.theta_f.items()},
        )

    @property
    def n_classes(self):
        return self.theta_h["score.w"].shape[0]


@dataclass
class SegBatch:
    """Images (n, c, h, w) with per-pixel class labels (n, h, w) in [0, C)."""

    images: np.ndarray
    labels: np.ndarray


@dataclass
class SalBatch:
    """Images (n, c, h, w) with binary saliency masks (n, 1, h, w)."""

    images: np.ndarray
    masks: np.ndarray


def _xavier(rng, shape):
    fan_in = shape[1] * shape[2] * shape[3]
    fan_out = shape[0] * shape[2] * shape[3]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_params(spec=None, seed=0):
    """Xavier-uniform trunk, small-normal head scorers, exact-bilinear
    upsampling kernels."""
    spec = spec or NetSpec()
    rng = np.random.default_rng(seed)
    c1, c2, c3 = spec.trunk_channels
    theta_s = {
        "conv1.w": _xavier(rng, (c1, spec.in_channels, 3, 3)),
        "conv1.b": np.zeros(c1),
        "conv2.w": _xavier(rng, (c2, c1, 3, 3)),
        "conv2.b": np.zeros(c2),
        "conv3.w": _xavier(rng, (c3, c2, 3, 3)),
        "conv3.b": np.zeros(c3),
    }
    theta_h = {
        "score.w": rng.normal(0.0, 0.01, size=(spec.n_classes, c3, 1, 1)),
        "score.b": np.zeros(spec.n_classes),
        "up.w": layers.bilinear_kernel2x(spec.n_classes),
    }
    theta_f = {
        "score.w": rng.normal(0.0, 0.01, size=(1, c3, 1, 1)),
        "score.b": np.zeros(1),
        "up.w": layers.bilinear_kernel2x(1),
    }
    return TinyNetParams(theta_s=theta_s, theta_h=theta_h, theta_f=theta_f)


def _forward_cache(params, images, head):
    x = np.asarray(images, dtype=np.float64)
    if x.ndim != 4:
        raise ValueError(f"images must be (n, c, h, w), got shape {x.shape}")
    if x.shape[2] % 2 or x.shape[3] % 2:
        raise ValueError(f"spatial dims must be even, got {x.shape[2]}x{x.shape[3]}")
    s = params.theta_s
    t = params.head(head)
    cache = {"x": x}
    cache["z1"] = layers.conv2d_forward(x, s["conv1.w"], s["conv1.b"])
    cache["a1"] = layers.relu_forward(cache["z1"])
    cache["p1"], cache["pool_idx"] = layers.maxpool2_forward(cache["a1"])
    cache["z2"] = layers.conv2d_forward(cache["p1"], s["conv2.w"], s["conv2.b"])
    cache["a2"] = layers.relu_forward(cache["z2"])
    cache["z3"] = layers.conv2d_forward(cache["a2"], s["conv3.w"], s["conv3.b"])
    cache["a3"] = layers.relu_forward(cache["z3"])
    cache["score"] = layers.conv2d_forward(cache["a3"], t["score.w"], t["score.b"])
    cache["up"] = layers.upsample2x_forward(cache["score"], t["up.w"])
    if head == "seg":
        cache["out"] = layers.softmax_channels(cache["up"])
    else:
        cache["out"] = layers.sigmoid(cache["up"])
    return cache


def forward(params, images, head):
    """Dense prediction at input resolution.

    ``head='seg'`` returns per-pixel class probabilities (n, C, h, w) that
    sum to one over channels; ``head='sal'`` returns a sigmoid map
    (n, 1, h, w) strictly inside (0, 1).
    """
    return _forward_cache(params, images, head)["out"]


def seg_loss(probs, labels):
    """Cross entropy, summed over classes and pixels, averaged over images."""
    n = probs.shape[0]
    labels = np.asarray(labels)
    if labels.shape != (n,) + probs.shape[2:]:
        raise ValueError("labels must be (n, h, w) matching the probability maps")
    if labels.min() < 0 or labels.max() >= probs.shape[1]:
        raise ValueError("labels out of class range")
    picked = np.take_along_axis(probs, labels[:, None], axis=1)[:, 0]
    return float(-np.log(np.maximum(picked, LOG_EPS)).sum() / n)


def sal_loss(pred, masks):
    """Squared error, summed over pixels, averaged over images."""
    masks = np.asarray(masks, dtype=np.float64)
    if masks.shape != pred.shape:
        raise ValueError("mask shape differs from prediction shape")
    diff = masks - pred
    return float((diff * diff).sum() / pred.shape[0])


def _head_delta(cache, batch, head):
    n = cache["x"].shape[0]
    if head == "seg":
        probs = cache["out"]
        onehot = np.zeros_like(probs)
        np.put_along_axis(onehot, np.asarray(batch.labels)[:, None], 1.0, axis=1)
        loss = seg_loss(probs, batch.labels)
        return loss, (probs - onehot) / n
    pred = cache["out"]
    loss = sal_loss(pred, batch.masks)
    dpred = (2.0 / n) * (pred - np.asarray(batch.masks, dtype=np.float64))
    return loss, dpred * pred * (1.0 - pred)


def loss_and_grads(params, batch, head):
    """Loss plus exact gradients for theta_s and the selected head."""
    cache = _forward_cache(params, batch.images, head)
    loss, dup = _head_delta(cache, batch, head)

    s = params.theta_s
    t = params.head(head)
    dscore, dup_w = layers.upsample2x_backward(cache["score"], t["up.w"], dup)
    da3, dscore_w, dscore_b = layers.conv2d_backward(cache["a3"], t["score.w"], dscore)
    grad_head = {"score.w": dscore_w, "score.b": dscore_b, "up.w": dup_w}

    dz3 = layers.relu_backward(cache["z3"], da3)
    da2, dw3, db3 = layers.conv2d_backward(cache["a2"], s["conv3.w"], dz3)
    dz2 = layers.relu_backward(cache["z2"], da2)
    dp1, dw2, db2 = layers.conv2d_backward(cache["p1"], s["conv2.w"], dz2)
    da1 = layers.maxpool2_backward(cache["pool_idx"], cache["a1"].shape, dp1)
    dz1 = layers.relu_backward(cache["z1"], da1)
    _, dw1, db1 = layers.conv2d_backward(cache["x"], s["conv1.w"], dz1)
    grad_s = {
        "conv1.w": dw1,
        "conv1.b": db1,
        "conv2.w": dw2,
        "conv2.b": db2,
        "conv3.w": dw3,
        "conv3.b": db3,
    }
    return loss, grad_s, grad_head


def backward(params, batch, head):
    """Gradients of the task loss for (theta_s, theta_head)."""
    _, grad_s, grad_head = loss_and_grads(params, batch, head)
    return grad_s, grad_head
