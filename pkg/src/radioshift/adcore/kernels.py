"""Backend selection for the conv1d gather/scatter kernels.

The compiled extension is used when importable; set ``RADIOSHIFT_KERNELS=numpy``
to force the pure-numpy fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "numpy"
_impl = _kernels_py

if os.environ.get("RADIOSHIFT_KERNELS", "").lower() != "numpy":
    try:
        from . import _kernels_cy as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

out_length = _kernels_py.out_length


def im2col1d(x, k, stride, pad):
    return _impl.im2col1d(np.ascontiguousarray(x), k, stride, pad)


def col2im1d(cols, length, k, stride, pad):
    return _impl.col2im1d(np.ascontiguousarray(cols), length, k, stride, pad)


def available_backends():
    out = {"numpy": _kernels_py}
    try:
        from . import _kernels_cy
        out["cython"] = _kernels_cy
    except ImportError:
        pass
    return out
