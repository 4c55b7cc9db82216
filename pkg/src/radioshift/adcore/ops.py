"""Differentiable operations on :class:`Tensor`.

Every op returns a new tensor whose ``_backward`` maps the output gradient
to one gradient per parent (``None`` where a parent needs none).
"""
import numpy as np

from ..errors import DegenerateBatchError, LabelError, ShapeError
from . import kernels
from .tensor import Tensor


def _result(data, parents, backward, op):
    needs = any(p.requires_grad for p in parents)
    return Tensor(data, requires_grad=needs, _parents=tuple(parents) if needs else (),
                  _backward=backward if needs else None, op=op)


def _operand(x, like):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=like.dtype))


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, n in enumerate(shape):
        if n == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


# -- elementwise ---------------------------------------------------------------
def add(a, b):
    if not isinstance(a, Tensor):
        a = _operand(a, b)
    b = _operand(b, a)
    sa, sb = a.shape, b.shape
    return _result(a.data + b.data, (a, b),
                   lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)), "add")


def sub(a, b):
    if not isinstance(a, Tensor):
        a = _operand(a, b)
    b = _operand(b, a)
    sa, sb = a.shape, b.shape
    return _result(a.data - b.data, (a, b),
                   lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)), "sub")


def mul(a, b):
    if not isinstance(a, Tensor):
        a = _operand(a, b)
    b = _operand(b, a)
    ad, bd = a.data, b.data
    return _result(ad * bd, (a, b),
                   lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)), "mul")


def div(a, b):
    if not isinstance(a, Tensor):
        a = _operand(a, b)
    b = _operand(b, a)
    ad, bd = a.data, b.data
    out = ad / bd
    return _result(out, (a, b),
                   lambda g: (_unbroadcast(g / bd, ad.shape),
                              _unbroadcast(-g * out / bd, bd.shape)), "div")


def neg(a):
    return _result(-a.data, (a,), lambda g: (-g,), "neg")


def power(a, p):
    ad = a.data
    return _result(ad ** p, (a,), lambda g: (g * p * ad ** (p - 1),), "pow")


def exp(a):
    out = np.exp(a.data)
    return _result(out, (a,), lambda g: (g * out,), "exp")


def log(a):
    ad = a.data
    return _result(np.log(ad), (a,), lambda g: (g / ad,), "log")


def abs(a):  # noqa: A001 - mirrors numpy naming
    sgn = np.sign(a.data)
    return _result(np.abs(a.data), (a,), lambda g: (g * sgn,), "abs")


def clamp_min(a, lo):
    """max(a, lo); the gradient passes only where ``a > lo``."""
    mask = a.data > lo
    return _result(np.where(mask, a.data, np.asarray(lo, a.dtype)), (a,),
                   lambda g: (g * mask,), "clamp_min")


def relu(a):
    mask = a.data > 0
    return _result(a.data * mask, (a,), lambda g: (g * mask,), "relu")


def sigmoid(a):
    x = a.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return _result(out, (a,), lambda g: (g * out * (1 - out),), "sigmoid")


def softplus(a):
    x = a.data
    out = np.logaddexp(0, x).astype(x.dtype)
    sig = 1.0 / (1.0 + np.exp(-x))
    return _result(out, (a,), lambda g: (g * sig,), "softplus")


def grad_reverse(a, coeff):
    """Identity forward; backward multiplies the gradient by ``-coeff``."""
    if coeff < 0:
        raise ValueError(f"gradient reversal coefficient must be >= 0, got {coeff}")
    c = -float(coeff)
    return _result(a.data.copy(), (a,), lambda g: (g * c,), "grl")


# -- reductions and shape ------------------------------------------------------
def sum(a, axis=None, keepdims=False):  # noqa: A001
    shape = a.shape

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)
    return _result(np.sum(a.data, axis=axis, keepdims=keepdims), (a,), bw, "sum")


def mean(a, axis=None, keepdims=False):
    shape = a.shape
    n = a.data.size if axis is None else int(np.prod([shape[i] for i in np.atleast_1d(axis)]))

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / n, shape).astype(a.dtype),)
    return _result(np.mean(a.data, axis=axis, keepdims=keepdims), (a,), bw, "mean")


def reshape(a, shape):
    old = a.shape
    return _result(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),), "reshape")


def transpose(a, axes=None):
    inv = None if axes is None else np.argsort(axes)
    return _result(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inv),), "transpose")


def getitem(a, idx):
    shape, dtype = a.shape, a.dtype

    def bw(g):
        out = np.zeros(shape, dtype=dtype)
        np.add.at(out, idx, g)
        return (out,)
    return _result(a.data[idx], (a,), bw, "getitem")


def concat(tensors, axis=0):
    tensors = list(tensors)
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]
    return _result(np.concatenate([t.data for t in tensors], axis=axis), tensors,
                   lambda g: tuple(np.split(g, cuts, axis=axis)), "concat")


def matmul(a, b):
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    ad, bd = a.data, b.data
    return _result(ad @ bd, (a, b), lambda g: (g @ bd.T, ad.T @ g), "matmul")


# -- network layers ------------------------------------------------------------
def dense(x, w, b=None):
    """``x @ w.T + b`` for x [B, F_in], w [F_out, F_in], b [F_out]."""
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"dense: input {x.shape} does not conform to weight {w.shape}")
    if b is not None and b.shape != (w.shape[0],):
        raise ShapeError(f"dense: bias {b.shape} does not match F_out={w.shape[0]}")
    xd, wd = x.data, w.data
    # row-wise products keep each output row independent of the batch size
    out = np.matmul(xd[:, None, :], wd.T)[:, 0, :]
    if b is not None:
        out = out + b.data

    def bw(g):
        if b is None:
            return g @ wd, g.T @ xd
        return g @ wd, g.T @ xd, g.sum(axis=0)
    parents = (x, w, b) if b is not None else (x, w)
    return _result(out, parents, bw, "dense")


def conv1d(x, w, b=None, stride=1, pad=0):
    """Cross-correlation of x [B, C_in, L] with w [C_out, C_in, k]."""
    if x.ndim != 3 or w.ndim != 3:
        raise ShapeError(f"conv1d: expected 3-d input and weight, got {x.shape} and {w.shape}")
    bsz, cin, length = x.shape
    cout, wcin, k = w.shape
    if wcin != cin:
        raise ShapeError(f"conv1d: input has C_in={cin} but weight expects C_in={wcin}")
    if k > length + 2 * pad:
        raise ShapeError(f"conv1d: kernel {k} longer than padded input {length + 2 * pad}")
    if b is not None and b.shape != (cout,):
        raise ShapeError(f"conv1d: bias {b.shape} does not match C_out={cout}")
    if stride < 1:
        raise ShapeError(f"conv1d: stride must be >= 1, got {stride}")
    cols = kernels.im2col1d(x.data, k, stride, pad)
    w2 = w.data.reshape(cout, cin * k)
    out = np.matmul(w2, cols)
    if b is not None:
        out += b.data[None, :, None]

    def bw(g):
        gw = np.tensordot(g, cols, axes=([0, 2], [0, 2])).reshape(w.shape)
        gx = kernels.col2im1d(np.matmul(w2.T, g), length, k, stride, pad) if x.requires_grad else None
        if b is None:
            return gx, gw
        return gx, gw, g.sum(axis=(0, 2))
    parents = (x, w, b) if b is not None else (x, w)
    return _result(out, parents, bw, "conv1d")


def batchnorm1d(x, gamma, beta, running_mean, running_var, mode="train", eps=1e-5,
                momentum=0.1, update_stats=True):
    """Per-channel normalisation of x [B, C, L].

    ``mode='train'`` normalises with the biased batch statistics over (B, L)
    and, when ``update_stats``, blends them into the running buffers with
    weight ``momentum``. ``mode='eval'`` uses the running buffers.
    """
    if x.ndim != 3:
        raise ShapeError(f"batchnorm1d: expected [B, C, L], got {x.shape}")
    bsz, c, length = x.shape
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeError(f"batchnorm1d: affine params must be ({c},)")
    xd = x.data
    gd = gamma.data[None, :, None]
    if mode == "train":
        n = bsz * length
        if n < 2:
            raise DegenerateBatchError(f"batchnorm1d: need B*L >= 2 in train mode, got {n}")
        mu = xd.mean(axis=(0, 2))
        xc = xd - mu[None, :, None]
        var = (xc * xc).mean(axis=(0, 2))
        inv = (1.0 / np.sqrt(var + eps)).astype(xd.dtype)
        xhat = xc * inv[None, :, None]
        if update_stats:
            running_mean *= 1 - momentum
            running_mean += momentum * mu
            running_var *= 1 - momentum
            running_var += momentum * var

        def bw(g):
            gg = g * gd
            gxhat_mean = gg.mean(axis=(0, 2), keepdims=True)
            proj = (gg * xhat).mean(axis=(0, 2), keepdims=True)
            gx = inv[None, :, None] * (gg - gxhat_mean - xhat * proj)
            return gx, (g * xhat).sum(axis=(0, 2)), g.sum(axis=(0, 2))
    elif mode == "eval":
        inv = (1.0 / np.sqrt(running_var + eps)).astype(xd.dtype)
        xhat = (xd - running_mean.astype(xd.dtype)[None, :, None]) * inv[None, :, None]

        def bw(g):
            return g * gd * inv[None, :, None], (g * xhat).sum(axis=(0, 2)), g.sum(axis=(0, 2))
    else:
        raise ValueError(f"unknown batchnorm mode {mode!r}")
    out = xhat * gd + beta.data[None, :, None]
    return _result(out, (x, gamma, beta), bw, "batchnorm1d")


def dropout(x, p, mode="train", rng=None):
    """Inverted dropout: survivors are scaled by 1/(1-p) so eval is identity."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if mode == "eval" or p == 0.0:
        return x
    if rng is None:
        raise ValueError("train-mode dropout needs an rng")
    mask = (rng.random(x.shape) >= p).astype(x.dtype) / np.asarray(1.0 - p, x.dtype)
    return _result(x.data * mask, (x,), lambda g: (g * mask,), "dropout")


def relu_dropout(x, p_drop, mode="train", rng=None):
    return dropout(relu(x), p_drop, mode, rng)


def global_avg_pool(x):
    """Mean over the last axis of x [B, C, L]."""
    if x.ndim != 3 or x.shape[2] < 1:
        raise ShapeError(f"global_avg_pool: expected [B, C, L>=1], got {x.shape}")
    length = x.shape[2]
    return _result(x.data.mean(axis=2), (x,),
                   lambda g: (np.repeat(g[:, :, None] / length, length, axis=2),), "gap")


def log_softmax(logits, axis=-1):
    z = logits.data
    m = z.max(axis=axis, keepdims=True)
    lse = m + np.log(np.exp(z - m).sum(axis=axis, keepdims=True))
    out = z - lse
    sm = np.exp(out)
    return _result(out, (logits,),
                   lambda g: (g - sm * g.sum(axis=axis, keepdims=True),), "log_softmax")


def softmax(logits, axis=-1):
    z = logits.data
    e = np.exp(z - z.max(axis=axis, keepdims=True))
    out = e / e.sum(axis=axis, keepdims=True)
    return _result(out, (logits,),
                   lambda g: (out * (g - (g * out).sum(axis=axis, keepdims=True)),), "softmax")


def check_onehot(onehot):
    y = np.asarray(onehot.data if isinstance(onehot, Tensor) else onehot)
    if y.ndim != 2 or not np.all((y == 0) | (y == 1)) or not np.all(y.sum(axis=1) == 1):
        raise LabelError("labels must be one-hot rows that sum to 1")
    return y


def softmax_cross_entropy(logits, onehot):
    """Mean over the batch of -sum_k y_k log softmax(logits)_k."""
    y = check_onehot(onehot)
    if y.shape != logits.shape:
        raise ShapeError(f"labels {y.shape} do not match logits {logits.shape}")
    z = logits.data
    m = z.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(z - m).sum(axis=1, keepdims=True))
    bsz = z.shape[0]
    loss = -np.sum(y * (z - lse)) / bsz
    sm = np.exp(z - lse)
    return _result(np.asarray(loss, dtype=z.dtype), (logits,),
                   lambda g: (g * (sm - y) / bsz,), "softmax_ce")


def binary_cross_entropy(prob, target, eps=1e-7):
    """Mean BCE of probabilities against 0/1 targets of the same shape."""
    t = np.asarray(target, dtype=prob.dtype).reshape(prob.shape)
    p = np.clip(prob.data, eps, 1 - eps)
    n = p.size
    loss = -np.mean(t * np.log(p) + (1 - t) * np.log(1 - p))
    return _result(np.asarray(loss, dtype=prob.dtype), (prob,),
                   lambda g: (g * (p - t) / (p * (1 - p)) / n,), "bce")


def onehot(labels, k, dtype=np.float32):
    labels = np.asarray(labels)
    out = np.zeros((len(labels), k), dtype=dtype)
    out[np.arange(len(labels)), labels] = 1
    return out
