"""Parameters and the Adam update."""
import numpy as np

from .tensor import Tensor


class Parameter(Tensor):
    """A learnable leaf tensor carrying its own Adam moment estimates."""

    __slots__ = ("name", "learnable", "m", "v", "step")

    def __init__(self, data, name="", learnable=True, dtype=None):
        super().__init__(data, requires_grad=learnable, dtype=dtype)
        self.name = name
        self.learnable = learnable
        self.m = np.zeros_like(self.data)
        self.v = np.zeros_like(self.data)
        self.step = 0

    def reset_state(self):
        self.m = np.zeros_like(self.data)
        self.v = np.zeros_like(self.data)
        self.step = 0

    def __repr__(self):
        return f"Parameter({self.name or '?'}, shape={self.shape})"


def zero_grad(params):
    for p in params:
        p.grad = None


def adam_step(params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """Bias-corrected Adam. Parameters without a gradient are left untouched."""
    for p in params:
        if p.grad is None or not p.learnable:
            continue
        g = p.grad.astype(p.data.dtype, copy=False)
        p.step += 1
        p.m *= beta1
        p.m += (1 - beta1) * g
        p.v *= beta2
        p.v += (1 - beta2) * g * g
        mhat = p.m / (1 - beta1 ** p.step)
        vhat = p.v / (1 - beta2 ** p.step)
        p.data -= (lr * mhat / (np.sqrt(vhat) + eps)).astype(p.data.dtype)


class Adam:
    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps

    def zero_grad(self):
        zero_grad(self.params)

    def step(self):
        adam_step(self.params, self.lr, self.betas[0], self.betas[1], self.eps)
