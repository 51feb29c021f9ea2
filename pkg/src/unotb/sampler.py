"""Rejection sampling from the learned plans.

The left marginal of the k-th plan has density ``conj_grad(-f^c(x))``
relative to ``P_k``, where ``f^c(x) = mean_s[c(x, T_k(x, s)) - f_k(T_k(x, s))]``
is estimated through the learned map. Candidates ``x ~ P_k`` are kept when
``u <= w(x) / c_rej`` with ``c_rej`` the largest weight in the candidate
pool, and accepted points are pushed through ``T_k`` with fresh noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cost import CostFn
from .divergence import Divergence
from .errors import NumericError, ShapeError
from .model import MapBank, PotentialBank
from .trainer import ctransform_terms

STOCHASTIC_DRAWS = 16
MIN_RATE = 1e-4
MAX_CANDIDATES = 1_000_000
_CHUNK = 8192


@dataclass
class AcceptanceWeights:
    w: np.ndarray
    c_rej: float

    @property
    def prob(self) -> np.ndarray:
        """Acceptance probabilities ``w / c_rej``, all in ``[0, 1]``."""
        return np.minimum(self.w / self.c_rej, 1.0)


@dataclass
class RejectionResult:
    accepted: np.ndarray
    samples: np.ndarray
    index: np.ndarray
    """Positions of the accepted points in the candidate stream."""
    n_candidates: int
    acceptance_rate: float


def estimate_ctransform(
    potentials: PotentialBank,
    maps: MapBank,
    k: int,
    x,
    cost: CostFn | None = None,
    noise_draws: int | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Monte-Carlo ``f_k^c(x)`` through ``T_k``; ``k`` is 0-based."""
    cost = cost if cost is not None else CostFn()
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != maps.in_dims[k]:
        raise ShapeError(f"T{k + 1} expects input dim {maps.in_dims[k]}, got {x.shape[1]}")
    if not maps.stochastic:
        draws = 1
    else:
        draws = STOCHASTIC_DRAWS if noise_draws is None else int(noise_draws)
        rng = rng if rng is not None else np.random.default_rng(0)
    out = np.empty(x.shape[0])
    step = max(1, _CHUNK // draws)
    for lo in range(0, x.shape[0], step):
        xb = x[lo : lo + step]
        noise = maps.noise(rng, xb.shape[0] * draws) if maps.stochastic else None
        out[lo : lo + step] = ctransform_terms(potentials, maps, cost, k, xb, noise).data
    return out


def weights_from_ctransform(div: Divergence, fc) -> AcceptanceWeights:
    w = np.asarray(div.conj_grad(-np.asarray(fc, dtype=np.float64)), dtype=np.float64)
    if w.size == 0:
        raise ShapeError("acceptance weights need a non-empty batch")
    if not np.all(np.isfinite(w)):
        raise NumericError("non-finite acceptance weight")
    c = float(w.max())
    if c <= 0.0:
        raise NumericError("degenerate acceptance: every weight is zero")
    return AcceptanceWeights(w, c)


def acceptance_weights(
    potentials: PotentialBank,
    maps: MapBank,
    k: int,
    x,
    div: Divergence,
    cost: CostFn | None = None,
    noise_draws: int | None = None,
    rng: np.random.Generator | None = None,
) -> AcceptanceWeights:
    fc = estimate_ctransform(potentials, maps, k, x, cost, noise_draws, rng)
    return weights_from_ctransform(div, fc)


def accept(weights: AcceptanceWeights, rng: np.random.Generator) -> np.ndarray:
    """Boolean keep-mask, ``u <= w / c_rej``."""
    u = rng.uniform(size=weights.w.shape[0])
    return u <= weights.w / weights.c_rej


def rejection_sample(
    potentials: PotentialBank,
    maps: MapBank,
    k: int,
    source: Callable[[np.random.Generator, int], np.ndarray],
    n_target: int,
    div: Divergence,
    cost: CostFn | None = None,
    seed: int | list[int] = 0,
    pool_size: int | None = None,
    noise_draws: int | None = None,
) -> RejectionResult:
    """Draw ``n_target`` points from the k-th plan's left marginal and map them.

    Candidates come in pools of ``pool_size`` (default ``max(n_target, 4096)``);
    each pool is normalized by its own maximum weight.
    """
    if n_target < 1:
        raise ValueError("n_target must be >= 1")
    pool = int(pool_size) if pool_size else max(int(n_target), 4096)
    ss = np.random.SeedSequence(seed).spawn(4)
    src_rng, u_rng, fc_rng, map_rng = (np.random.default_rng(s) for s in ss)
    kept: list[np.ndarray] = []
    kept_idx: list[np.ndarray] = []
    n_kept = 0
    seen = 0
    while n_kept < n_target:
        X = np.atleast_2d(np.asarray(source(src_rng, pool), dtype=np.float64))
        wts = acceptance_weights(potentials, maps, k, X, div, cost, noise_draws, fc_rng)
        mask = accept(wts, u_rng)
        kept.append(X[mask])
        kept_idx.append(seen + np.flatnonzero(mask))
        n_kept += int(mask.sum())
        seen += X.shape[0]
        if seen >= MAX_CANDIDATES and n_kept / seen < MIN_RATE:
            raise NumericError(
                f"acceptance rate {n_kept / seen:.2e} below {MIN_RATE:g} after {seen} candidates; "
                "the potentials are likely degenerate"
            )
    accepted = np.concatenate(kept)[:n_target]
    index = np.concatenate(kept_idx)[:n_target]
    # rate over the candidates actually needed to reach n_target
    n_used = int(index[-1]) + 1
    noise = maps.noise(map_rng, accepted.shape[0]) if maps.stochastic else None
    samples = maps.apply(k, accepted, noise).data
    return RejectionResult(accepted, samples, index, n_used, accepted.shape[0] / n_used)
