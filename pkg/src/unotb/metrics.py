from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .discrete_ot import w2_empirical
from .errors import NumericError, ShapeError
from .gaussian import GaussianParams, bw2, fit_gaussian


@dataclass
class MetricReport:
    metric: str
    value: float
    n: int
    seed: int | None = None
    config_hash: str | None = None

    def __post_init__(self):
        self.value = float(self.value)
        if not math.isfinite(self.value) or self.value < 0:
            raise NumericError(f"metric {self.metric} must be finite and >= 0, got {self.value!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def config_hash(text: str | bytes) -> str:
    if isinstance(text, str):
        text = text.encode()
    return hashlib.sha256(text).hexdigest()[:16]


def _paired(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise ShapeError(f"paired evaluations differ in shape: {a.shape} vs {b.shape}")
    if a.shape[0] == 0:
        raise ShapeError("no evaluations")
    return a, b


def l2_map_metric(t_hat, t_star) -> float:
    """Mean squared deviation between two maps evaluated on the same inputs."""
    a, b = _paired(t_hat, t_star)
    return float(np.mean(np.sum((a - b) ** 2, axis=1)))


def total_variance(samples) -> float:
    X = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if X.shape[0] < 2:
        raise ShapeError("need at least two samples for a variance")
    return float(np.trace(np.atleast_2d(np.cov(X, rowvar=False))))


def l2_uvp(t_hat, t_star, q_star) -> float:
    """``100 * l2_map_metric / var(Q*)`` in percent; ``var`` is the trace of the covariance.

    ``q_star`` may be samples or a :class:`GaussianParams`.
    """
    var = q_star.total_variance if isinstance(q_star, GaussianParams) else total_variance(q_star)
    if var <= 0:
        raise NumericError("reference barycenter has zero variance")
    return 100.0 * l2_map_metric(t_hat, t_star) / var


def weighted_l2_uvp(per_k: Sequence[tuple], lam: Sequence[float]) -> float:
    """λ-weighted sum of per-marginal :func:`l2_uvp` values; ``per_k`` holds (t_hat, t_star, q_star)."""
    if len(per_k) != len(lam):
        raise ShapeError("need one weight per marginal")
    return float(sum(l * l2_uvp(*args) for l, args in zip(lam, per_k)))


def bw2_uvp(q_hat, q_star) -> float:
    """``100 * BW2^2(Q_hat, Q*) / (var(Q*) / 2)``, fitting Gaussians to sample inputs."""
    g_hat = q_hat if isinstance(q_hat, GaussianParams) else fit_gaussian(q_hat)
    g_star = q_star if isinstance(q_star, GaussianParams) else fit_gaussian(q_star)
    var = g_star.total_variance
    if var <= 0:
        raise NumericError("reference barycenter has zero variance")
    return 100.0 * bw2(g_hat, g_star) / (0.5 * var)


def w2_metric(q_hat, q_star, **kw) -> float:
    """Squared Wasserstein-2 between equal-size sample clouds."""
    return w2_empirical(q_hat, q_star, **kw)[1]


def acceptance_stats(weights, labels, accepted=None, classes=None) -> dict:
    """Per-class mean acceptance probability and accepted-set composition.

    ``weights`` are acceptance probabilities in ``[0, 1]``. ``accepted`` is an
    optional boolean mask of the realized draws; without it the composition
    is the expected one, proportional to the summed probabilities. Passing
    ``classes`` makes a class with no members an error.
    """
    w = np.asarray(weights, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if w.shape != labels.shape:
        raise ShapeError(f"{w.shape[0]} weights for {labels.shape[0]} labels")
    if classes is None:
        classes = np.unique(labels)
    else:
        classes = np.asarray(classes)
        empty = [c for c in classes.tolist() if not np.any(labels == c)]
        if empty:
            raise ShapeError(f"class {empty[0]!r} has no samples")
    if classes.size == 0:
        raise ShapeError("no samples")
    if accepted is None:
        mass = np.array([w[labels == c].sum() for c in classes])
    else:
        accepted = np.asarray(accepted, dtype=bool).ravel()
        if accepted.shape != w.shape:
            raise ShapeError("accepted mask does not align with weights")
        mass = np.array([np.count_nonzero(accepted & (labels == c)) for c in classes], dtype=np.float64)
    total = mass.sum()
    out = {}
    for c, m in zip(classes, mass):
        sel = labels == c
        out[c.item()] = {
            "count": int(sel.sum()),
            "rate": float(w[sel].mean()),
            "fraction": float(m / total) if total > 0 else 0.0,
        }
    return out
