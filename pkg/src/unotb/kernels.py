"""Hot-loop dispatch: compiled extension when built, numpy otherwise.

Set ``UNOTB_PURE=1`` to force the numpy path. ``UNOTB_THREADS`` caps the
OpenMP threads used by the compiled kernels (default 1). Row reductions
are independent, so results do not depend on the thread count.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("UNOTB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


# zero-mass atoms: finite stand-in for log(0) so the compiled loop stays branch-free
_LOG_FLOOR = -1e300


def threads() -> int:
    try:
        return max(1, int(os.environ.get("UNOTB_THREADS", "1")))
    except ValueError:
        return 1


def softmin_rows(C: np.ndarray, g: np.ndarray, logw: np.ndarray, eps: float) -> np.ndarray:
    """Row-wise soft minimum ``-eps * logsumexp((g - C) / eps + logw)``."""
    return _impl.softmin_rows(
        np.ascontiguousarray(C, dtype=np.float64),
        np.ascontiguousarray(g, dtype=np.float64),
        np.maximum(np.ascontiguousarray(logw, dtype=np.float64), _LOG_FLOOR),
        float(eps),
        threads(),
    )


def sqdist(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances."""
    return _impl.sqdist(
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(Y, dtype=np.float64),
        threads(),
    )


def bias_relu_(out: np.ndarray, b: np.ndarray, relu: bool) -> None:
    """In-place ``out += b`` and optional ReLU on a C-contiguous 2-D array."""
    _impl.bias_relu_(out, np.ascontiguousarray(b, dtype=np.float64), bool(relu))


def relu_backward(g: np.ndarray, out: np.ndarray, want_bias: bool, inplace: bool = False):
    """Gradient through ReLU (``out`` is the post-activation) plus bias gradient.

    With ``inplace`` the mask is applied to ``g`` itself when its layout allows.
    """
    inplace = inplace and g.dtype == np.float64 and g.flags.c_contiguous and g.flags.writeable
    if not inplace:
        g = np.ascontiguousarray(g, dtype=np.float64)
    return _impl.relu_backward(g, np.ascontiguousarray(out, dtype=np.float64), bool(want_bias), inplace)
