"""Discrete reference solvers.

Plans use the parametrization ``pi[i, j] = a[i] b[j] exp((f[i] + g[j] - C[i, j]) / eps)``
with log-domain potential updates, so arbitrarily small ``eps`` is safe.
The semi-unbalanced solver relaxes the *row* (source) marginal with a KL
penalty of strength ``tau`` and keeps the column marginal exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .errors import ConvergenceError, NumericError, ShapeError


@dataclass
class DiscretePlan:
    plan: np.ndarray
    a: np.ndarray
    b: np.ndarray
    cost: float
    """Transport cost ``<C, plan>``."""
    value: float
    """Objective value: ``cost`` plus the marginal penalty (equal to ``cost`` when balanced)."""
    n_iter: int = 0
    residual: float = 0.0
    potentials: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    @property
    def row_marginal(self) -> np.ndarray:
        return self.plan.sum(axis=1)

    @property
    def col_marginal(self) -> np.ndarray:
        return self.plan.sum(axis=0)


def _prep(C, a, b):
    C = np.ascontiguousarray(C, dtype=np.float64)
    if C.ndim != 2:
        raise ShapeError(f"cost matrix must be 2-D, got shape {C.shape}")
    n, m = C.shape
    a = np.full(n, 1.0 / n) if a is None else np.asarray(a, dtype=np.float64)
    b = np.full(m, 1.0 / m) if b is None else np.asarray(b, dtype=np.float64)
    if a.shape != (n,) or b.shape != (m,):
        raise ShapeError(f"weights {a.shape}, {b.shape} do not match cost {C.shape}")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("marginal weights must be non-negative")
    if not np.all(np.isfinite(C)):
        raise NumericError("cost matrix has non-finite entries")
    return C, a, b


def eps_schedule(C: np.ndarray, eps: float, factor: float = 0.5) -> list[float]:
    """Geometric annealing from the cost scale down to ``eps`` (last entry)."""
    start = max(float(np.max(C)), eps)
    out = []
    e = start
    while e > eps:
        out.append(e)
        e *= factor
    out.append(eps)
    return out


def _log(w: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(w)


_WARMUP = 20
_OMEGA_MAX = 1.8


def _relaxation(history: list[float]) -> float:
    """Over-relaxation factor from the observed plain-Sinkhorn contraction rate."""
    if len(history) < _WARMUP or history[-1] <= 0 or history[0] <= 0:
        return 1.0
    rate = (history[-1] / history[0]) ** (1.0 / (len(history) - 1))
    if not 0.0 < rate < 1.0:
        return 1.0
    return min(_OMEGA_MAX, 2.0 / (1.0 + math.sqrt(1.0 - rate)))


def _sinkhorn(C, a, b, eps, tau, max_iter, tol, anneal, f0=None, g0=None):
    CT = np.ascontiguousarray(C.T)
    loga, logb = _log(a), _log(b)
    f = np.zeros(C.shape[0]) if f0 is None else np.array(f0, dtype=np.float64)
    g = np.zeros(C.shape[1]) if g0 is None else np.array(g0, dtype=np.float64)
    stages = eps_schedule(C, eps) if anneal else [eps]
    total = 0
    residual = math.inf
    for stage_eps in stages:
        k = 1.0 if tau is None else tau / (tau + stage_eps)
        final = stage_eps == stages[-1]
        stage_tol = tol if final else max(tol, 1e-3)
        # plain iterations first; once the linear rate is measurable, switch to
        # over-relaxed updates, falling back to plain ones if the residual grows
        omega = 1.0
        history: list[float] = []
        best = math.inf
        for it in range(max_iter):
            h = kernels.softmin_rows(C, g, logb, stage_eps)
            # row mass now vs after the f update; identical at the fixed point
            with np.errstate(over="ignore", invalid="ignore"):
                r_now = a * np.exp((f - h) / stage_eps)
                r_next = a * np.exp((k - 1.0) * h / stage_eps)
            residual = float(np.nansum(np.abs(r_now - r_next)))
            if omega > 1.0 and not residual < 10.0 * best:
                omega = 1.0
                history = []
            best = min(best, residual)
            if omega == 1.0:
                history.append(residual)
                if len(history) >= _WARMUP:
                    omega = _relaxation(history)
                    history = [] if omega == 1.0 else history
            f_new = k * h
            f = f_new if omega == 1.0 else (1.0 - omega) * f + omega * f_new
            if tau is not None:
                # optimal common shift (f + t, g - t) of the dual; removes the
                # slow translation mode that otherwise contracts at rate tau/(tau+eps)
                f = f + tau * (logsumexp(-f / tau, b=a) - math.log(b.sum()))
            g_new = kernels.softmin_rows(CT, f, loga, stage_eps)
            total += 1
            if residual <= stage_tol:
                g = g_new  # columns exact on exit
                break
            g = g_new if omega == 1.0 else (1.0 - omega) * g + omega * g_new
        else:
            g = kernels.softmin_rows(CT, f, loga, stage_eps)
            if final:
                raise ConvergenceError(
                    f"Sinkhorn did not converge in {max_iter} iterations at eps={stage_eps:g}", residual
                )
    return f, g, total, residual


def _assemble(C, a, b, f, g, eps, tau, n_iter, residual) -> DiscretePlan:
    with np.errstate(divide="ignore", under="ignore"):
        logp = (f[:, None] + g[None, :] - C) / eps + _log(a)[:, None] + _log(b)[None, :]
    plan = np.exp(logp)
    cost = float(np.sum(plan * C))
    value = cost
    if tau is not None:
        r = plan.sum(axis=1)
        mask = r > 0
        kl = float(np.sum(r[mask] * np.log(r[mask] / a[mask]))) - float(r.sum()) + float(a.sum())
        value = cost + tau * kl
    if not np.all(np.isfinite(plan)):
        raise NumericError("Sinkhorn plan has non-finite entries")
    return DiscretePlan(plan, a, b, cost, value, n_iter, residual, (f, g))


def sinkhorn_balanced(
    C,
    a=None,
    b=None,
    eps: float = 1e-2,
    max_iter: int = 100_000,
    tol: float = 1e-7,
    anneal: bool = True,
) -> DiscretePlan:
    """Entropic OT plan between weights ``a`` (rows) and ``b`` (columns).

    ``tol`` bounds the L1 violation of the row marginal; columns are exact
    after the final update. With ``anneal`` the regularization starts at
    ``max(C)`` and halves down to ``eps``, warm-starting each stage.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    C, a, b = _prep(C, a, b)
    if not math.isclose(a.sum(), b.sum(), rel_tol=1e-9):
        raise ValueError(f"balanced OT needs equal masses, got {a.sum()} and {b.sum()}")
    f, g, n_iter, res = _sinkhorn(C, a, b, eps, None, max_iter, tol, anneal)
    return _assemble(C, a, b, f, g, eps, None, n_iter, res)


def sinkhorn_semi_unbalanced(
    C,
    a=None,
    b=None,
    eps: float = 1e-2,
    tau: float = 1.0,
    max_iter: int = 100_000,
    tol: float = 1e-7,
    anneal: bool = True,
) -> DiscretePlan:
    """Entropic plan with KL(tau)-relaxed rows and exact columns.

    Minimizes ``<C, P> + tau KL(P 1 | a) + eps KL(P | a b^T)`` subject to
    ``P^T 1 = b``. The row update is the balanced soft-min scaled by
    ``tau / (tau + eps)``.
    """
    if eps <= 0 or tau <= 0:
        raise ValueError("eps and tau must be positive")
    C, a, b = _prep(C, a, b)
    f, g, n_iter, res = _sinkhorn(C, a, b, eps, float(tau), max_iter, tol, anneal)
    return _assemble(C, a, b, f, g, eps, float(tau), n_iter, res)


def brute_force_ot(C) -> DiscretePlan:
    """Exact uniform OT for square ``n <= 7`` by enumerating permutations."""
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ShapeError(f"brute force needs a square cost matrix, got {C.shape}")
    n = C.shape[0]
    if n > 7:
        raise ValueError(f"brute force limited to n <= 7, got {n}")
    rows = np.arange(n)
    best_perm, best = None, math.inf
    for perm in itertools.permutations(range(n)):
        total = float(C[rows, perm].sum())
        if total < best:
            best, best_perm = total, perm
    plan = np.zeros((n, n))
    plan[rows, list(best_perm)] = 1.0 / n
    w = np.full(n, 1.0 / n)
    cost = best / n
    return DiscretePlan(plan, w, w.copy(), cost, cost)


def _same_cloud(X: np.ndarray, Y: np.ndarray) -> bool:
    # identical empirical measures; the entropic estimate would leave a blur term
    kx = np.lexsort(X.T[::-1])
    ky = np.lexsort(Y.T[::-1])
    return bool(np.array_equal(X[kx], Y[ky]))


def w2_empirical(X, Y, eps: float | None = None, rel_eps: float = 1e-3, tol: float = 1e-4) -> tuple[float, float]:
    """``(W2, W2^2)`` between equal-size uniform clouds.

    Uses the unhalved cost ``||x - y||^2`` and annealed Sinkhorn down to
    ``eps`` (default ``rel_eps * mean(C)``).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape != Y.shape:
        raise ShapeError(f"w2_empirical needs equal-size samples, got {X.shape} and {Y.shape}")
    if _same_cloud(X, Y):
        return 0.0, 0.0
    C = kernels.sqdist(X, Y)
    mean = float(C.mean())
    eps = rel_eps * mean if eps is None else eps
    sq = max(sinkhorn_balanced(C, eps=eps, tol=tol, max_iter=100_000).cost, 0.0)
    return math.sqrt(sq), sq


@dataclass
class InterpolationOracle:
    x1: np.ndarray
    """Input samples from the balanced side."""
    t_star: np.ndarray
    """``T*(x1)``: the reference barycenter samples ``Q*``."""
    t_uot: np.ndarray
    """Barycentric projection of the semi-unbalanced plan at each ``x1``."""
    plan: DiscretePlan
    """Plan with rows indexed by ``x1`` and columns by ``x2``."""
    lam: tuple[float, float]
    tau: float

    @property
    def q_star(self) -> np.ndarray:
        return self.t_star

    def source_weights(self) -> np.ndarray:
        """Reweighted mass on the relaxed side (column sums of ``plan``)."""
        return self.plan.plan.sum(axis=0)


def interpolated_barycenter_oracle(
    X1,
    X2,
    lam=(0.5, 0.5),
    tau: float = 1.0,
    rel_eps: float = 1e-3,
    tol: float = 1e-6,
) -> InterpolationOracle:
    """Two-marginal reference for ``lam1 OT(P1, Q) + lam2 SUOT_tau(P2, Q)``, quadratic costs.

    Minimizing over ``Q`` first collapses the problem to a semi-unbalanced
    transport between ``P1`` (exact) and ``P2`` (KL-relaxed) under the cost
    ``lam1 * ||x - y||^2 / 2`` and the same ``tau``. The barycentric
    projection ``T_uot`` of that plan gives ``T*(x) = lam1 x + lam2 T_uot(x)``
    and ``Q* = T*_# P1``.
    """
    X1 = np.atleast_2d(np.asarray(X1, dtype=np.float64))
    X2 = np.atleast_2d(np.asarray(X2, dtype=np.float64))
    if X1.shape[1] != X2.shape[1]:
        raise ShapeError(f"dimension mismatch {X1.shape[1]} vs {X2.shape[1]}")
    l1, l2 = float(lam[0]), float(lam[1])
    if not math.isclose(l1 + l2, 1.0, abs_tol=1e-9) or l1 <= 0 or l2 < 0:
        raise ValueError(f"lam must be a positive pair summing to 1, got {lam}")
    # rows: relaxed side P2; columns: exact side P1
    C = 0.5 * l1 * kernels.sqdist(X2, X1)
    eps = rel_eps * float(C.mean()) if C.mean() > 0 else rel_eps
    sol = sinkhorn_semi_unbalanced(C, eps=eps, tau=tau, tol=tol, max_iter=100_000)
    P = sol.plan.T  # rows x1, columns x2
    mass = P.sum(axis=1)
    if np.any(mass < 1e-12):
        raise NumericError(f"degenerate plan row {int(np.argmin(mass))}: mass {mass.min():.3e}")
    t_uot = (P @ X2) / mass[:, None]
    t_star = l1 * X1 + l2 * t_uot
    plan = DiscretePlan(P, sol.b, sol.a, sol.cost, sol.value, sol.n_iter, sol.residual)
    return InterpolationOracle(X1, t_star, t_uot, plan, (l1, l2), float(tau))
