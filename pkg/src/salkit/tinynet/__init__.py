"""Desk-scale two-task fully convolutional network trained by alternation."""

from .checkpoint import load_params, save_params
from .net import (
    NetSpec,
    SalBatch,
    SegBatch,
    TinyNetParams,
    backward,
    forward,
    init_params,
    loss_and_grads,
    sal_loss,
    seg_loss,
)
from .train import (
    DivergenceError,
    LossRecord,
    TrainHyper,
    alternate_train,
    make_disc_dataset,
    sgd_step,
)

__all__ = [
    "NetSpec",
    "SalBatch",
    "SegBatch",
    "TinyNetParams",
    "TrainHyper",
    "DivergenceError",
    "LossRecord",
    "alternate_train",
    "backward",
    "forward",
    "init_params",
    "load_params",
    "loss_and_grads",
    "make_disc_dataset",
    "sal_loss",
    "save_params",
    "seg_loss",
    "sgd_step",
]
