"""Congruent potentials and transport maps.

The K potentials are built from free auxiliary networks ``g_k`` and a
scalar ``m`` as::

    f_k = g_k - sum_{n != k} lam_n / (lam_k (K - 1)) g_n + m / (K lam_k)

which makes ``sum_k lam_k f_k == m`` hold identically, whatever the
network weights are.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import Mlp, Parameter, Tape, Tensor, concat, no_tape
from .errors import ConfigError, ShapeError


def _check_weights(lam: Sequence[float]) -> np.ndarray:
    lam = np.asarray(lam, dtype=np.float64)
    if lam.ndim != 1 or lam.size < 1:
        raise ConfigError("need at least one barycenter weight")
    if np.any(lam <= 0):
        raise ConfigError(f"barycenter weights must be positive, got {lam.tolist()}")
    if not np.isclose(lam.sum(), 1.0, atol=1e-9):
        raise ConfigError(f"barycenter weights must sum to 1, got {lam.sum()!r}")
    return lam


class PotentialBank:
    def __init__(
        self,
        dim: int,
        lam: Sequence[float],
        hidden: Sequence[int] = (128, 128, 128),
        rng: np.random.Generator | None = None,
    ):
        self.lam = _check_weights(lam)
        self.K = self.lam.size
        self.dim = int(dim)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.g = [Mlp([dim, *hidden, 1], rng, name=f"g{k + 1}") for k in range(self.K)]
        self.m = Parameter("m", np.zeros(()))
        # mix[k, n]: coefficient of g_n in f_k
        K = self.K
        mix = np.eye(K)
        if K > 1:
            for k in range(K):
                for n in range(K):
                    if n != k:
                        mix[k, n] = -self.lam[n] / (self.lam[k] * (K - 1))
        self.mix = mix
        self.m_coef = 1.0 / (K * self.lam)

    @property
    def parameters(self) -> list[Parameter]:
        out: list[Parameter] = []
        for net in self.g:
            out += net.parameters
        return out

    def potential(self, k: int, y: Tensor | np.ndarray, tape: Tape | None = None) -> Tensor:
        """``f_k(y)`` for a batch ``y`` of shape ``(n, dim)``; 0-based ``k``; returns shape ``(n,)``."""
        if not 0 <= k < self.K:
            raise IndexError(f"potential index {k} out of range for K={self.K}")
        tape = tape if tape is not None else no_tape()
        y = y if isinstance(y, Tensor) else Tensor(np.atleast_2d(np.asarray(y, dtype=np.float64)))
        if y.data.shape[-1] != self.dim:
            raise ShapeError(f"potential expects dim {self.dim}, got {y.data.shape[-1]}")
        out = None
        for n in range(self.K):
            coef = self.mix[k, n]
            if coef == 0.0:
                continue
            term = self.g[n].forward(y, tape) * coef
            out = term if out is None else out + term
        out = out.reshape(-1)
        return out + tape.param(self.m) * self.m_coef[k]

    def __call__(self, k: int, y) -> np.ndarray:
        return self.potential(k, y).data

    def state(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for net in self.g:
            out.update(net.state())
        out["m"] = self.m.data
        return out

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for net in self.g:
            net.load_state(state)
        self.m.data[...] = np.asarray(state["m"], dtype=np.float64).reshape(())


def potential_eval(bank: PotentialBank, k: int, y) -> np.ndarray:
    """1-based convenience wrapper returning plain arrays."""
    return bank.potential(k - 1, y).data


class MapBank:
    """K networks ``T_k(x, s)``; deterministic when ``noise_dim == 0``."""

    def __init__(
        self,
        in_dims: Sequence[int],
        out_dim: int,
        hidden: Sequence[int] = (128, 128, 128),
        noise_dim: int = 0,
        rng: np.random.Generator | None = None,
    ):
        rng = rng if rng is not None else np.random.default_rng(0)
        if noise_dim < 0:
            raise ConfigError("noise_dim must be >= 0")
        self.in_dims = [int(d) for d in in_dims]
        self.out_dim = int(out_dim)
        self.noise_dim = int(noise_dim)
        self.K = len(self.in_dims)
        self.T = [
            Mlp([d + self.noise_dim, *hidden, self.out_dim], rng, name=f"T{k + 1}")
            for k, d in enumerate(self.in_dims)
        ]

    @property
    def stochastic(self) -> bool:
        return self.noise_dim > 0

    def parameters(self, k: int | None = None) -> list[Parameter]:
        nets = self.T if k is None else [self.T[k]]
        out: list[Parameter] = []
        for net in nets:
            out += net.parameters
        return out

    def noise(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_normal((n, self.noise_dim))

    def apply(self, k: int, x, s=None, tape: Tape | None = None) -> Tensor:
        """``T_k`` on a batch; ``s`` is required iff the bank is stochastic."""
        tape = tape if tape is not None else no_tape()
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[-1] != self.in_dims[k]:
            raise ShapeError(f"T{k + 1} expects input dim {self.in_dims[k]}, got {x.shape[-1]}")
        if self.stochastic:
            if s is None:
                raise ShapeError(f"T{k + 1} is stochastic and needs noise of dim {self.noise_dim}")
            s = np.atleast_2d(np.asarray(s, dtype=np.float64))
            if s.shape != (x.shape[0], self.noise_dim):
                raise ShapeError(f"noise shape {s.shape} != {(x.shape[0], self.noise_dim)}")
            inp = concat([Tensor(x), Tensor(s)], axis=1)
        else:
            if s is not None and np.size(s) > 0:
                raise ShapeError("deterministic map takes no noise")
            inp = Tensor(x)
        return self.T[k].forward(inp, tape)

    def __call__(self, k: int, x, s=None) -> np.ndarray:
        return self.apply(k, x, s).data

    def state(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for net in self.T:
            out.update(net.state())
        return out

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for net in self.T:
            net.load_state(state)


def map_eval(bank: MapBank, k: int, x, s=None) -> np.ndarray:
    """1-based convenience wrapper returning plain arrays."""
    return bank.apply(k - 1, x, s).data
