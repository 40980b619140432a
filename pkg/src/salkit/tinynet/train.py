"""Alternating two-task SGD training plus the synthetic disc corpus.

One meta-round = a segmentation phase updating (theta_s, theta_h) followed
by a saliency phase updating (theta_s, theta_f); the untouched head is left
bit-identical. Momentum velocities start from zero at each phase boundary
since the two phases optimize different objectives. Everything is seeded and
single-threaded, so runs are exactly reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .net import SalBatch, SegBatch, init_params, loss_and_grads


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss; carries the last finite losses."""

    def __init__(self, phase, step, last_losses):
        super().__init__(
            f"non-finite loss in {phase} phase at step {step}; last finite losses: {last_losses}"
        )
        self.last_losses = last_losses


@dataclass
class TrainHyper:
    """Toy-scale defaults; the reference operating point (momentum 0.99,
    lr 1e-10, weight decay 5e-4) is tuned for a large pretrained trunk and
    can be requested explicitly."""

    lr: float = 1e-2
    momentum: float = 0.9
    weight_decay: float = 5e-4
    rounds: int = 3
    steps_per_phase: int = 200
    batch_size: int = 8
    seed: int = 42


def sgd_step(params, grads, velocity=None, lr=1e-2, momentum=0.0, weight_decay=0.0):
    """One momentum-SGD update over a dict of named tensors.

    v <- momentum * v - lr * (grad + weight_decay * param)
    param <- param + v

    Returns (new_params, new_velocity); a None velocity means all zeros.
    """
    if velocity is None:
        velocity = {k: np.zeros_like(v) for k, v in params.items()}
    new_params, new_velocity = {}, {}
    for key, value in params.items():
        v = momentum * velocity[key] - lr * (grads[key] + weight_decay * value)
        new_velocity[key] = v
        new_params[key] = value + v
    return new_params, new_velocity


@dataclass
class LossRecord:
    round: int
    phase: str
    step: int
    loss: float


def _batches(rng, n_items, batch_size):
    # Endless seeded-epoch iterator over index batches.
    while True:
        order = rng.permutation(n_items)
        for start in range(0, n_items, batch_size):
            chunk = order[start : start + batch_size]
            if chunk.size:
                yield chunk


def alternate_train(seg_data, sal_data, rounds=3, steps_per_phase=200, hyper=None, spec=None):
    """Run the alternating two-phase schedule and return (params, loss log).

    seg_data / sal_data are full SegBatch / SalBatch corpora; mini-batches
    are drawn in seeded shuffled epochs.
    """
    hyper = hyper or TrainHyper()
    if seg_data.images.shape[0] == 0 or sal_data.images.shape[0] == 0:
        raise ValueError("both task datasets must be non-empty")
    params = init_params(spec=spec, seed=hyper.seed)
    rng = np.random.default_rng(hyper.seed + 1)
    seg_iter = _batches(rng, seg_data.images.shape[0], hyper.batch_size)
    sal_iter = _batches(rng, sal_data.images.shape[0], hyper.batch_size)
    log = []
    last_losses = {"seg": None, "sal": None}

    for rnd in range(rounds):
        for phase in ("seg", "sal"):
            vel_s = vel_head = None
            for step in range(steps_per_phase):
                if phase == "seg":
                    idx = next(seg_iter)
                    batch = SegBatch(seg_data.images[idx], seg_data.labels[idx])
                else:
                    idx = next(sal_iter)
                    batch = SalBatch(sal_data.images[idx], sal_data.masks[idx])
                loss, grad_s, grad_head = loss_and_grads(params, batch, phase)
                if not np.isfinite(loss):
                    raise DivergenceError(phase, step, dict(last_losses))
                last_losses[phase] = loss
                log.append(LossRecord(rnd, phase, step, loss))
                params.theta_s, vel_s = sgd_step(
                    params.theta_s, grad_s, vel_s, hyper.lr, hyper.momentum, hyper.weight_decay
                )
                head_new, vel_head = sgd_step(
                    params.head(phase), grad_head, vel_head, hyper.lr, hyper.momentum, hyper.weight_decay
                )
                if phase == "seg":
                    params.theta_h = head_new
                else:
                    params.theta_f = head_new
    return params, log


def make_disc_dataset(n_images, size=16, seed=0):
    """Random bright discs on dark ground: images, class labels, masks.

    Returns (SegBatch, SalBatch) built from the same draws; the disc is
    class 1 and salient, the ground is class 0 and background.
    """
    if size % 2:
        raise ValueError("size must be even")
    rng = np.random.default_rng(seed)
    images = np.empty((n_images, 3, size, size))
    masks = np.empty((n_images, 1, size, size))
    yy, xx = np.mgrid[0:size, 0:size]
    for i in range(n_images):
        bg = rng.uniform(0.0, 0.3, size=3)
        fg = rng.uniform(0.7, 1.0, size=3)
        cy, cx = rng.uniform(0.3 * size, 0.7 * size, size=2)
        radius = rng.uniform(0.15 * size, 0.3 * size)
        disc = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2
        img = bg[:, None, None] + rng.normal(0.0, 0.02, size=(3, size, size))
        img[:, disc] = fg[:, None] + rng.normal(0.0, 0.02, size=(3, int(disc.sum())))
        images[i] = np.clip(img, 0.0, 1.0)
        masks[i, 0] = disc
    labels = masks[:, 0].astype(np.int64)
    return SegBatch(images, labels), SalBatch(images, masks)
