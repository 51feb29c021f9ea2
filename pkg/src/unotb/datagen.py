"""Seeded synthetic datasets.

Every generator draws mixture component counts multinomially, then
shuffles rows, so ``sample(name, n, rng)`` can feed training batches and
``generate(spec)`` gives a reproducible fixed matrix.

Conventions where the source data definitions leave freedom:

* ``moons``: two interleaved unit half-circles, the second offset by
  ``(1, -0.5)``, noise 0.1, then centred on ``(0.5, 0.25)`` and divided by
  the noiseless per-axis spreads ``(0.87, 0.5)``.
* ``spiral``: Archimedean ``r = 0.35 * phi``, ``phi ~ U[1, 4 pi]``, noise 0.05,
  scaled so the noiseless curve has radius 2.
* ``gm8``: eight Gaussians on a circle of radius 4, std 0.2.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError

_IMB_STD = 0.4
_OUT_STD = 0.1
_OUTLIER_STD = 0.02
_OUTLIER_FRAC = 0.05

OUTLIER_INLIER_MEANS = {
    "outlier_p1": [(-5, -1), (5, 1), (1, -5), (-1, 5)],
    "outlier_p2": [(-5, 1), (5, -1), (1, 5), (-1, -5)],
    "outlier_p3": [(-5, 0), (5, 0), (0, 5), (0, -5)],
}
OUTLIER_OUTLIER_MEANS = {
    "outlier_p1": [(10, 2), (10, 1), (10, 0), (10, -1)],
    "outlier_p2": [(-10, 1), (-10, 0), (10, -1), (10, -2)],
}
IMBALANCE = {
    "imbalance_p1": ([(-5, 4), (-5, -4)], [0.25, 0.75]),
    "imbalance_p2": ([(5, 4), (5, -4)], [0.75, 0.25]),
}


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    n: int
    seed: int = 0
    params: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"dataset size must be >= 1, got {self.n}")
        if self.name not in GENERATORS:
            raise ConfigError(f"unknown dataset {self.name!r}; expected one of {sorted(GENERATORS)}")


def _mixture(rng, n, means, stds, weights):
    means = np.asarray(means, dtype=np.float64)
    counts = rng.multinomial(n, weights)
    labels = np.repeat(np.arange(len(weights)), counts)
    stds = np.broadcast_to(np.asarray(stds, dtype=np.float64), (len(weights),))
    X = means[labels] + stds[labels, None] * rng.standard_normal((n, means.shape[1]))
    perm = rng.permutation(n)
    return X[perm], labels[perm]


def _moons(rng, n, **_):
    counts = rng.multinomial(n, [0.5, 0.5])
    labels = np.repeat([0, 1], counts)
    t = rng.uniform(0.0, np.pi, size=n)
    x = np.where(labels == 0, np.cos(t), 1.0 - np.cos(t))
    y = np.where(labels == 0, np.sin(t), 0.5 - np.sin(t))
    X = np.stack([x, y], axis=1) + 0.1 * rng.standard_normal((n, 2))
    X = (X - np.array([0.5, 0.25])) / np.array([0.87, 0.5])
    perm = rng.permutation(n)
    return X[perm], labels[perm]


def _spiral(rng, n, **_):
    phi = rng.uniform(1.0, 4.0 * np.pi, size=n)
    r = 0.35 * phi
    X = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)
    X = X * (2.0 / (0.35 * 4.0 * np.pi)) + 0.05 * rng.standard_normal((n, 2))
    return X, np.zeros(n, dtype=np.int64)


def _gm8(rng, n, **_):
    ang = 2.0 * np.pi * np.arange(8) / 8
    means = 4.0 * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return _mixture(rng, n, means, 0.2, np.full(8, 1 / 8))


def _imbalance(name):
    means, weights = IMBALANCE[name]

    def gen(rng, n, **_):
        return _mixture(rng, n, means, _IMB_STD, weights)

    return gen


def _outlier(name):
    inl = OUTLIER_INLIER_MEANS[name]
    outl = OUTLIER_OUTLIER_MEANS.get(name)

    def gen(rng, n, **_):
        if outl is None:
            return _mixture(rng, n, inl, _OUT_STD, np.full(4, 0.25))
        w = np.concatenate([np.full(4, (1 - _OUTLIER_FRAC) / 4), np.full(4, _OUTLIER_FRAC / 4)])
        stds = [_OUT_STD] * 4 + [_OUTLIER_STD] * 4
        return _mixture(rng, n, inl + outl, stds, w)

    return gen


def _gaussian(rng, n, mean=None, cov=None, **_):
    if mean is None or cov is None:
        raise ConfigError("gaussian dataset needs 'mean' and 'cov'")
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    L = np.linalg.cholesky(np.atleast_2d(np.asarray(cov, dtype=np.float64)))
    return mean + rng.standard_normal((n, mean.shape[0])) @ L.T, np.zeros(n, dtype=np.int64)


GENERATORS: dict[str, Callable] = {
    "moons": _moons,
    "spiral": _spiral,
    "gm8": _gm8,
    "imbalance_p1": _imbalance("imbalance_p1"),
    "imbalance_p2": _imbalance("imbalance_p2"),
    "outlier_p1": _outlier("outlier_p1"),
    "outlier_p2": _outlier("outlier_p2"),
    "outlier_p3": _outlier("outlier_p3"),
    "gaussian": _gaussian,
}


def sample_labeled(name: str, n: int, rng: np.random.Generator, **params) -> tuple[np.ndarray, np.ndarray]:
    """Samples plus integer component labels.

    Labels index mixture components; for the outlier sets, labels ``>= 4``
    mark outliers.
    """
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise ConfigError(f"unknown dataset {name!r}; expected one of {sorted(GENERATORS)}") from None
    return gen(rng, int(n), **params)


def sample(name: str, n: int, rng: np.random.Generator, **params) -> np.ndarray:
    return sample_labeled(name, n, rng, **params)[0]


def is_outlier(name: str, labels: np.ndarray) -> np.ndarray:
    if name not in OUTLIER_OUTLIER_MEANS:
        return np.zeros(len(labels), dtype=bool)
    return np.asarray(labels) >= 4


def generate(spec: DatasetSpec) -> np.ndarray:
    return sample(spec.name, spec.n, np.random.default_rng(spec.seed), **spec.params)


def generate_labeled(spec: DatasetSpec) -> tuple[np.ndarray, np.ndarray]:
    return sample_labeled(spec.name, spec.n, np.random.default_rng(spec.seed), **spec.params)


def dim_of(name: str, **params) -> int:
    if name == "gaussian":
        return int(np.atleast_1d(params["mean"]).shape[0])
    return 2


def sampler(name: str, **params) -> Callable[[np.random.Generator, int], np.ndarray]:
    """``fn(rng, n) -> (n, d)`` batch sampler for training."""

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        return sample(name, n, rng, **params)

    draw.dataset = name  # type: ignore[attr-defined]
    return draw


def to_csv(X: np.ndarray, header: list[str] | None = None) -> str:
    """Comma-separated, '.' decimal, full round-trip precision."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    for row in np.atleast_2d(X):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def from_csv(text: str, header: bool = False) -> np.ndarray:
    rows = list(csv.reader(io.StringIO(text)))
    if header:
        rows = rows[1:]
    rows = [r for r in rows if r]
    return np.array([[float(v) for v in r] for r in rows], dtype=np.float64)
