"""Closed-form Gaussian optimal transport: Bures-Wasserstein distance,
fixed-point barycenters, and linear OT maps."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, NumericError, ShapeError


@dataclass
class GaussianParams:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        d = self.mean.shape[0]
        if self.cov.shape != (d, d):
            raise ShapeError(f"covariance shape {self.cov.shape} does not match mean dim {d}")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def total_variance(self) -> float:
        return float(np.trace(self.cov))

    def check_spd(self) -> None:
        if not np.allclose(self.cov, self.cov.T, atol=1e-10, rtol=0):
            raise NumericError("covariance is not symmetric")
        if np.linalg.eigvalsh(self.cov).min() <= 0:
            raise NumericError("covariance is not positive definite")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        L = np.linalg.cholesky(self.cov)
        return self.mean + rng.standard_normal((n, self.dim)) @ L.T

    def to_json(self) -> str:
        return json.dumps({"mean": self.mean.tolist(), "cov": self.cov.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "GaussianParams":
        obj = json.loads(text)
        return cls(obj["mean"], obj["cov"])


def _eig_spd(S: np.ndarray, what: str = "matrix") -> tuple[np.ndarray, np.ndarray]:
    S = 0.5 * (S + S.T)
    w, V = np.linalg.eigh(S)
    if w.min() <= 0:
        raise NumericError(f"{what} is not positive definite (min eigenvalue {w.min():.3e})")
    return w, V


def sqrtm_spd(S: np.ndarray) -> np.ndarray:
    """Principal square root of an SPD matrix via symmetric eigendecomposition."""
    w, V = _eig_spd(S)
    return (V * np.sqrt(w)) @ V.T


def inv_sqrtm_spd(S: np.ndarray) -> np.ndarray:
    w, V = _eig_spd(S)
    return (V / np.sqrt(w)) @ V.T


def bw2(g1: GaussianParams, g2: GaussianParams) -> float:
    """Squared Bures-Wasserstein distance (= W2^2 between the Gaussians)."""
    if g1.dim != g2.dim:
        raise ShapeError(f"dimension mismatch {g1.dim} vs {g2.dim}")
    g1.check_spd()
    g2.check_spd()
    if np.array_equal(g1.mean, g2.mean) and np.array_equal(g1.cov, g2.cov):
        return 0.0  # the root below only cancels to rounding
    r1 = sqrtm_spd(g1.cov)
    cross = sqrtm_spd(r1 @ g2.cov @ r1)
    diff = g1.mean - g2.mean
    val = float(diff @ diff + np.trace(g1.cov) + np.trace(g2.cov) - 2.0 * np.trace(cross))
    return max(val, 0.0)


def fixed_point_barycenter(
    gaussians: Sequence[GaussianParams],
    lam: Sequence[float],
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> tuple[GaussianParams, int]:
    """Balanced W2 barycenter by the Alvarez-Esteban et al. fixed point.

    Iterates ``S <- S^{-1/2} (sum_k lam_k (S^{1/2} S_k S^{1/2})^{1/2})^2 S^{-1/2}``
    from ``S_0 = sum_k lam_k S_k`` until successive iterates are within
    ``tol`` in squared Bures distance. Returns ``(barycenter, iterations)``.
    """
    lam = np.asarray(lam, dtype=np.float64)
    if len(gaussians) != lam.shape[0] or len(gaussians) == 0:
        raise ShapeError("need one weight per Gaussian")
    if np.any(lam < 0) or not np.isclose(lam.sum(), 1.0, atol=1e-9):
        raise ValueError(f"weights must lie on the simplex, got {lam}")
    for g in gaussians:
        g.check_spd()
    mean = sum(l * g.mean for l, g in zip(lam, gaussians))
    S = sum(l * g.cov for l, g in zip(lam, gaussians))
    residual = np.inf
    for it in range(1, max_iter + 1):
        r = sqrtm_spd(S)
        ri = inv_sqrtm_spd(S)
        M = sum(l * sqrtm_spd(r @ g.cov @ r) for l, g in zip(lam, gaussians))
        S_new = ri @ M @ M @ ri
        S_new = 0.5 * (S_new + S_new.T)
        residual = bw2(GaussianParams(mean, S), GaussianParams(mean, S_new))
        S = S_new
        if residual <= tol:
            return GaussianParams(mean, S), it
    raise ConvergenceError(f"fixed point did not converge in {max_iter} iterations", residual)


def fit_gaussian(samples) -> GaussianParams:
    """Sample mean and unbiased covariance."""
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n, d = X.shape
    if n <= d:
        raise NumericError(f"need more than {d} samples to fit a {d}-D Gaussian, got {n}")
    mean = X.mean(axis=0)
    cov = np.atleast_2d(np.cov(X, rowvar=False))
    cov = 0.5 * (cov + cov.T)
    w = np.linalg.eigvalsh(cov)
    if w.min() <= 1e-12 * max(w.max(), 1e-300):
        raise NumericError("sample covariance is rank-deficient; draw more (or more varied) samples")
    return GaussianParams(mean, cov)


def ot_map(src: GaussianParams, dst: GaussianParams):
    """Linear Monge map ``x -> dst.mean + A (x - src.mean)`` between Gaussians.

    Returns ``(A, b)`` such that the map is ``x @ A.T + b``.
    """
    r = sqrtm_spd(src.cov)
    ri = inv_sqrtm_spd(src.cov)
    A = ri @ sqrtm_spd(r @ dst.cov @ r) @ ri
    A = 0.5 * (A + A.T)
    b = dst.mean - A @ src.mean
    return A, b


def apply_map(A: np.ndarray, b: np.ndarray, X) -> np.ndarray:
    return np.asarray(X, dtype=np.float64) @ A.T + b


def random_spd(dim: int, rng: np.random.Generator, low: float = 0.5, high: float = 2.0) -> np.ndarray:
    """SPD matrix with a Haar-random eigenbasis and eigenvalues in ``[low, high]``."""
    Q, R = np.linalg.qr(rng.standard_normal((dim, dim)))
    Q = Q * np.sign(np.diag(R))
    w = rng.uniform(low, high, size=dim)
    S = (Q * w) @ Q.T
    return 0.5 * (S + S.T)


def benchmark_instance(dim: int, k: int = 3, seed: int = 0) -> list[GaussianParams]:
    """Seeded Gaussian inputs for the balanced barycenter benchmark."""
    rng = np.random.default_rng(seed)
    return [GaussianParams(rng.uniform(-1.0, 1.0, size=dim), random_spd(dim, rng)) for _ in range(k)]
