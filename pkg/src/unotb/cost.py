from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core.tape import Tensor
from .errors import ConfigError, ShapeError


@dataclass(frozen=True)
class CostFn:
    """Quadratic transport cost ``alpha * ||x - y||^2 / 2``."""

    kind: str = "quadratic"
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind != "quadratic":
            raise ConfigError(f"unknown cost {self.kind!r}; only 'quadratic' is supported")
        if not self.alpha > 0:
            raise ConfigError(f"cost alpha must be positive, got {self.alpha!r}")

    @staticmethod
    def _check(x: np.ndarray, y: np.ndarray) -> None:
        if x.shape[-1] != y.shape[-1]:
            raise ShapeError(f"cost: dimension mismatch {x.shape[-1]} vs {y.shape[-1]}")

    def eval(self, x, y):
        """Cost per row; scalar for 1-D inputs."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        self._check(x, y)
        d = y - x
        return 0.5 * self.alpha * np.sum(d * d, axis=-1)

    def grad_y(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        self._check(x, y)
        return self.alpha * (y - x)

    def on_tape(self, x: np.ndarray, y: Tensor) -> Tensor:
        """Row-wise cost with ``y`` tracked; ``x`` is a constant batch."""
        self._check(np.asarray(x), y.data)
        d = y - x
        return (d * d).sum(axis=1) * (0.5 * self.alpha)

    def matrix(self, x, y) -> np.ndarray:
        """Pairwise cost matrix ``C[i, j] = c(x_i, y_j)``."""
        from .kernels import sqdist

        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        self._check(x, y)
        return 0.5 * self.alpha * sqdist(x, y)
