"""Parameterised layers built on adcore ops."""
import numpy as np

from ..adcore import Parameter, ops
from .module import Module


def _kaiming(rng, shape, fan_in, dtype):
    return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)


class Conv1d(Module):
    def __init__(self, cin, cout, k, stride=1, pad=0, bias=False, rng=None, dtype=np.float32):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng()
        self.stride, self.pad = stride, pad
        self.weight = Parameter(_kaiming(rng, (cout, cin, k), cin * k, dtype))
        self.bias = Parameter(np.zeros(cout, dtype)) if bias else None

    def __call__(self, x):
        return ops.conv1d(x, self.weight, self.bias, self.stride, self.pad)


class BatchNorm1d(Module):
    def __init__(self, c, eps=1e-5, momentum=0.1, dtype=np.float32):
        super().__init__()
        self.eps, self.momentum = eps, momentum
        self.gamma = Parameter(np.ones(c, dtype))
        self.beta = Parameter(np.zeros(c, dtype))
        self.register_buffer("running_mean", np.zeros(c, dtype))
        self.register_buffer("running_var", np.ones(c, dtype))

    def __call__(self, x, mode="train", update_stats=True):
        # "target" passes use the running statistics but stay differentiable
        bn_mode = "train" if mode == "train" else "eval"
        return ops.batchnorm1d(x, self.gamma, self.beta, self.running_mean, self.running_var,
                               bn_mode, self.eps, self.momentum, update_stats)


class Dense(Module):
    def __init__(self, fin, fout, rng=None, dtype=np.float32):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng()
        self.weight = Parameter(_kaiming(rng, (fout, fin), fin, dtype))
        self.bias = Parameter(np.zeros(fout, dtype))

    def __call__(self, x):
        return ops.dense(x, self.weight, self.bias)
