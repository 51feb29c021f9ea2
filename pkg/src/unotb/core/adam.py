from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from ..errors import NumericError, ShapeError
from .tape import Parameter


class AdamState:
    """Adam with bias correction and no weight decay.

    ``step`` updates the parameters in place. ``maximize=True`` performs
    ascent, which is how the potentials and ``m`` are trained.
    """

    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float = 1e-3,
        beta1: float = 0.0,
        beta2: float = 0.9,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, grads: Mapping[Parameter, np.ndarray], maximize: bool = False) -> None:
        gs = []
        for p in self.params:
            g = np.asarray(grads[p], dtype=np.float64)
            if g.shape != p.data.shape:
                raise ShapeError(f"{p.name}: gradient shape {g.shape} != {p.data.shape}")
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient for parameter {p.name}")
            gs.append(-g if maximize else g)
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for p, g, m, v in zip(self.params, gs, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def clip_grad_norm(grads: dict[Parameter, np.ndarray], max_norm: float) -> float:
    """Rescale ``grads`` in place to global L2 norm ``max_norm``; returns the original norm."""
    total = float(np.sqrt(sum(float(np.vdot(g, g)) for g in grads.values())))
    if total > max_norm:
        scale = max_norm / total
        for p in grads:
            grads[p] = grads[p] * scale
    return total
