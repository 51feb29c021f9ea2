"""Pure numpy versions of the compiled kernels (used when the extension is absent)."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp


def softmin_rows(C, g, logw, eps, threads=1):
    z = (np.asarray(g)[None, :] - C) / eps + np.asarray(logw)[None, :]
    with np.errstate(invalid="ignore"):
        out = -eps * logsumexp(z, axis=1)
    return np.where(np.isnan(out), np.inf, out)


def sqdist(X, Y, threads=1):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[1] != Y.shape[1]:
        raise ValueError("sqdist: dimension mismatch")
    out = np.zeros((X.shape[0], Y.shape[0]))
    for k in range(X.shape[1]):
        diff = X[:, k, None] - Y[None, :, k]
        out += diff * diff
    return out


def bias_relu_(out, b, relu):
    out += b
    if relu:
        np.maximum(out, 0.0, out=out)


def relu_backward(g, out, want_bias, inplace=False):
    if inplace:
        gm = g
        gm[out <= 0.0] = 0.0
    else:
        gm = np.where(out > 0.0, g, 0.0)
    return gm, (gm.sum(axis=0) if want_bias else None)
