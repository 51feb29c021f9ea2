"""Adversarial max-min training of congruent potentials and transport maps.

Objective, maximized over the potentials (and ``m``) and minimized over
the maps::

    L = sum_k lam_k mean_x[ -conj_k( mean_s[f_k(T_k(x, s)) - c_k(x, T_k(x, s))] ) ] + m

Each outer iteration takes one ascent step on ``L`` for the potentials and
``m`` with the maps frozen, then ``n_t`` descent steps per map on the
c-transform surrogate ``mean[c_k(x, T_k) - f_k(T_k)]``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import AdamState, Tape, Tensor, clip_grad_norm, save_checkpoint
from .cost import CostFn
from .divergence import Divergence
from .errors import ConfigError, NumericError, TrainingDiverged
from .model import MapBank, PotentialBank

log = logging.getLogger(__name__)

Sampler = Callable[[np.random.Generator, int], np.ndarray]

LOSS_ABORT = 1e8


@dataclass
class BarycenterConfig:
    divergences: Sequence[Divergence]
    lam: Sequence[float]
    dim: int
    costs: Sequence[CostFn] | None = None
    in_dims: Sequence[int] | None = None
    batch_size: int = 1024
    iters: int = 10_000
    n_t: int = 3
    lr_f: float = 1e-3
    lr_t: float = 1e-3
    lr_m: float = 1e-3
    betas: tuple[float, float] = (0.0, 0.9)
    hidden_f: Sequence[int] = (128, 128, 128)
    hidden_t: Sequence[int] = (128, 128, 128)
    noise_dim: int = 0
    noise_draws: int = 1
    grad_clip: float = 100.0
    seed: int = 0
    datasets: Sequence[str] = ()
    log_every: int = 0

    def __post_init__(self):
        self.lam = [float(v) for v in self.lam]
        self.divergences = list(self.divergences)
        K = len(self.lam)
        if self.costs is None:
            self.costs = [CostFn() for _ in range(K)]
        if self.in_dims is None:
            self.in_dims = [self.dim] * K
        self.costs = list(self.costs)
        self.in_dims = [int(d) for d in self.in_dims]

    @property
    def K(self) -> int:
        return len(self.lam)

    def validate(self) -> None:
        K = self.K
        if K < 2:
            raise ConfigError(f"training needs K >= 2 marginals, got {K}")
        if len(self.divergences) != K or len(self.costs) != K or len(self.in_dims) != K:
            raise ConfigError("divergences, costs, and in_dims need one entry per marginal")
        if any(l <= 0 for l in self.lam) or abs(sum(self.lam) - 1.0) > 1e-9:
            raise ConfigError(f"lambda must be positive and sum to 1, got {self.lam}")
        if self.n_t < 1:
            raise ConfigError("N_T must be ≥ 1")
        if self.batch_size < 1:
            raise ConfigError("batch size must be ≥ 1")
        if self.iters < 0:
            raise ConfigError("iterations must be ≥ 0")
        if any(d != self.dim for d in self.in_dims):
            raise ConfigError("all input spaces must share the barycenter dimension")
        if self.noise_dim == 0 and self.noise_draws != 1:
            raise ConfigError("deterministic maps take exactly one noise draw")
        if self.noise_draws < 1:
            raise ConfigError("noise_draws must be ≥ 1")


@dataclass
class TrainReport:
    potential_loss: list[float] = field(default_factory=list)
    map_losses: list[list[float]] = field(default_factory=list)
    m_trajectory: list[float] = field(default_factory=list)
    wall_time_sec: float = 0.0
    checkpoint: str | None = None

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "losses": self.potential_loss,
            "map_losses": self.map_losses,
            "m_trajectory": self.m_trajectory,
        }
        if timing:
            out["wall_time_sec"] = self.wall_time_sec
        return out


def _check_finite(value: float, what: str) -> float:
    if not np.isfinite(value):
        raise NumericError(f"non-finite {what}")
    if abs(value) > LOSS_ABORT:
        raise TrainingDiverged(f"{what} magnitude {value:.3e} exceeds {LOSS_ABORT:g}; training diverged")
    return value


def _map_outputs(maps: MapBank, k: int, x: np.ndarray, noise, tape: Tape | None) -> tuple[np.ndarray, Tensor]:
    """Repeat ``x`` per noise draw and push through ``T_k``; returns (repeated x, outputs)."""
    if maps.stochastic:
        draws = noise.shape[0] // x.shape[0]
        xr = np.repeat(x, draws, axis=0)
        return xr, maps.apply(k, xr, noise, tape)
    return x, maps.apply(k, x, None, tape)


def ctransform_terms(
    potentials: PotentialBank,
    maps: MapBank,
    cost: CostFn,
    k: int,
    x: np.ndarray,
    noise: np.ndarray | None,
    tape: Tape | None = None,
    track_maps: bool = False,
) -> Tensor:
    """Per-sample ``mean_s[c(x, T_k(x, s)) - f_k(T_k(x, s))]`` (the c-transform estimate).

    With ``track_maps=False`` the map outputs are constants on ``tape``.
    """
    xr, y = _map_outputs(maps, k, x, noise, tape if track_maps else None)
    if not track_maps:
        y = Tensor(y.data, tape)
    vals = cost.on_tape(xr, y) - potentials.potential(k, y, tape)
    if maps.stochastic:
        vals = vals.reshape(x.shape[0], -1).mean(axis=1)
    return vals


def potential_objective(
    potentials: PotentialBank,
    maps: MapBank,
    cfg: BarycenterConfig,
    batches: Sequence[np.ndarray],
    noises: Sequence[np.ndarray | None],
    tape: Tape | None = None,
) -> Tensor:
    """Batch estimate of ``L``; to be maximized over the potentials and ``m``."""
    tape = tape if tape is not None else Tape(enabled=False)
    total = None
    for k in range(cfg.K):
        div = cfg.divergences[k]
        ct = ctransform_terms(potentials, maps, cfg.costs[k], k, batches[k], noises[k], tape)
        if not np.all(np.isfinite(ct.data)):
            bad = int(np.flatnonzero(~np.isfinite(ct.data))[0])
            raise NumericError(f"non-finite c-transform for marginal {k + 1}, sample {bad}")
        arg = -ct  # f(T) - c
        term = -arg.apply(div.conj, div.conj_grad).mean()
        term = term * cfg.lam[k]
        total = term if total is None else total + term
    return total + tape.param(potentials.m)


def map_objective(
    potentials: PotentialBank,
    maps: MapBank,
    cfg: BarycenterConfig,
    k: int,
    batch: np.ndarray,
    noise: np.ndarray | None,
    tape: Tape | None = None,
) -> Tensor:
    """``mean[c_k(x, T_k) - f_k(T_k)]``; to be minimized over the parameters of ``T_k``."""
    tape = tape if tape is not None else Tape(enabled=False)
    return ctransform_terms(potentials, maps, cfg.costs[k], k, batch, noise, tape, track_maps=True).mean()


def build_banks(cfg: BarycenterConfig) -> tuple[PotentialBank, MapBank]:
    ss = np.random.SeedSequence(cfg.seed)
    init_f, init_t = (np.random.default_rng(s) for s in ss.spawn(2))
    potentials = PotentialBank(cfg.dim, cfg.lam, cfg.hidden_f, init_f)
    maps = MapBank(cfg.in_dims, cfg.dim, cfg.hidden_t, cfg.noise_dim, init_t)
    return potentials, maps


def _rngs(seed: int, K: int):
    # separate streams: init (2), data per marginal, noise
    ss = np.random.SeedSequence(seed).spawn(2 + K + 1)
    return [np.random.default_rng(s) for s in ss[2 : 2 + K]], np.random.default_rng(ss[-1])


def train(
    cfg: BarycenterConfig,
    samplers: Sequence[Sampler],
    checkpoint_path: str | Path | None = None,
    callback: Callable[[int, PotentialBank, MapBank], None] | None = None,
) -> tuple[PotentialBank, MapBank, TrainReport]:
    """Run the max-min loop; deterministic for a fixed ``cfg.seed``."""
    cfg.validate()
    if len(samplers) != cfg.K:
        raise ConfigError(f"need {cfg.K} samplers, got {len(samplers)}")
    potentials, maps = build_banks(cfg)
    data_rngs, noise_rng = _rngs(cfg.seed, cfg.K)
    b1, b2 = cfg.betas
    opt_f = AdamState(potentials.parameters, cfg.lr_f, b1, b2)
    opt_m = AdamState([potentials.m], cfg.lr_m, b1, b2)
    opt_t = [AdamState(maps.parameters(k), cfg.lr_t, b1, b2) for k in range(cfg.K)]
    f_params = potentials.parameters + [potentials.m]
    report = TrainReport()
    B = cfg.batch_size

    def draw():
        xs = [np.asarray(samplers[k](data_rngs[k], B), dtype=np.float64) for k in range(cfg.K)]
        ns = [maps.noise(noise_rng, B * cfg.noise_draws) if maps.stochastic else None for _ in range(cfg.K)]
        return xs, ns

    t0 = time.perf_counter()
    for it in range(cfg.iters):
        xs, ns = draw()
        tape = Tape(watch=f_params)
        loss = potential_objective(potentials, maps, cfg, xs, ns, tape)
        report.potential_loss.append(_check_finite(loss.item(), "potential loss"))
        grads = tape.backward(loss)
        clip_grad_norm(grads, cfg.grad_clip)
        opt_f.step(grads, maximize=True)
        opt_m.step(grads, maximize=True)

        inner = np.zeros(cfg.K)
        for _ in range(cfg.n_t):
            xs, ns = draw()
            for k in range(cfg.K):
                tape = Tape(watch=maps.parameters(k))
                mloss = map_objective(potentials, maps, cfg, k, xs[k], ns[k], tape)
                inner[k] = _check_finite(mloss.item(), f"map loss {k + 1}")
                grads = tape.backward(mloss)
                clip_grad_norm(grads, cfg.grad_clip)
                opt_t[k].step(grads)
        report.map_losses.append(inner.tolist())
        report.m_trajectory.append(float(potentials.m.data))
        if cfg.log_every and (it + 1) % cfg.log_every == 0:
            log.info(
                "iter %d  L=%.5f  map=%s  m=%.4f",
                it + 1,
                report.potential_loss[-1],
                np.array2string(inner, precision=4),
                report.m_trajectory[-1],
            )
        if callback is not None:
            callback(it, potentials, maps)
    report.wall_time_sec = time.perf_counter() - t0
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, checkpoint_state(potentials, maps))
        report.checkpoint = str(checkpoint_path)
    return potentials, maps, report


def checkpoint_state(potentials: PotentialBank, maps: MapBank) -> dict[str, np.ndarray]:
    state = potentials.state()
    state.update(maps.state())
    return state
