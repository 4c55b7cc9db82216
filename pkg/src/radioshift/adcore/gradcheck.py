"""Central finite-difference gradient checks."""
import numpy as np

from .tensor import Tensor, backward


def numeric_grad(fn, inputs, idx, eps=1e-5):
    x = inputs[idx].data
    g = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + eps
        fp = float(fn(*inputs).data)
        flat[i] = old - eps
        fm = float(fn(*inputs).data)
        flat[i] = old
        gflat[i] = (fp - fm) / (2 * eps)
    return g


def grad_rel_error(fn, inputs, eps=1e-5):
    """Largest relative error between analytic and numeric gradients.

    ``fn`` maps the input tensors to a scalar tensor; inputs should be
    float64 leaves. The error for each input is ``|a - n|_2 / max(|a|_2, |n|_2)``
    (0 when both vanish).
    """
    for t in inputs:
        t.grad = None
        t.requires_grad = True
    backward(fn(*inputs))
    worst = 0.0
    for i, t in enumerate(inputs):
        a = np.zeros_like(t.data) if t.grad is None else t.grad
        n = numeric_grad(fn, inputs, i, eps)
        scale = max(np.linalg.norm(a), np.linalg.norm(n))
        if scale > 0:
            worst = max(worst, float(np.linalg.norm(a - n) / scale))
    return worst


def leaf(a):
    return Tensor(np.asarray(a, dtype=np.float64), requires_grad=True)
