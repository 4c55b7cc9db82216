"""Minimal reverse-mode autodiff over numpy arrays for 1-D CNN training."""
from . import kernels, ops
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import grad_rel_error, numeric_grad
from .ops import (
    batchnorm1d, binary_cross_entropy, conv1d, dense, dropout, global_avg_pool,
    grad_reverse, log_softmax, onehot, relu, relu_dropout, sigmoid, softmax,
    softmax_cross_entropy,
)
from .optim import Adam, Parameter, adam_step, zero_grad
from .tensor import Tensor, as_tensor, backward

__all__ = [
    "Adam", "Parameter", "Tensor", "adam_step", "as_tensor", "backward", "batchnorm1d",
    "binary_cross_entropy", "conv1d", "dense", "dropout", "global_avg_pool",
    "grad_rel_error", "grad_reverse", "kernels", "load_checkpoint", "log_softmax",
    "numeric_grad", "onehot", "ops", "relu", "relu_dropout", "save_checkpoint",
    "sigmoid", "softmax", "softmax_cross_entropy", "zero_grad",
]
