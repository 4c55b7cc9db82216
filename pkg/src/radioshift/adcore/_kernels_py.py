"""Pure-numpy conv1d gather/scatter kernels (fallback backend)."""
import numpy as np


def out_length(length, k, stride, pad):
    return (length + 2 * pad - k) // stride + 1


def im2col1d(x, k, stride, pad):
    """(B, C, L) -> (B, C*k, L_out) with row index ``c*k + j``."""
    b, c, length = x.shape
    lo = out_length(length, k, stride, pad)
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad))) if pad else x
    cols = np.empty((b, c, k, lo), dtype=x.dtype)
    span = stride * (lo - 1) + 1
    for j in range(k):
        cols[:, :, j, :] = xp[:, :, j:j + span:stride]
    return cols.reshape(b, c * k, lo)


def col2im1d(cols, length, k, stride, pad):
    """Adjoint of :func:`im2col1d`: scatter-add columns back to (B, C, L)."""
    b, ck, lo = cols.shape
    c = ck // k
    cols = cols.reshape(b, c, k, lo)
    xp = np.zeros((b, c, length + 2 * pad), dtype=cols.dtype)
    span = stride * (lo - 1) + 1
    for j in range(k):
        xp[:, :, j:j + span:stride] += cols[:, :, j, :]
    return xp[:, :, pad:pad + length] if pad else xp
