"""psi-divergences through their convex conjugates.

Every kind is scaled by the unbalancedness ``tau``: for a base generator
``psi'`` the divergence uses ``psi = tau * psi'(u)`` and the conjugate
``tau * conj'(t / tau)``. All conjugates satisfy ``conj(0) == 0`` and
``conj_grad(0) == 1``.

=========  ===========================================  ==============================
kind       conj(t)                                      conj_grad(t)
=========  ===========================================  ==============================
balanced   t                                            1
kl         tau * (exp(t/tau) - 1)                       exp(t/tau)
chi2       t + t^2/(4 tau) if t >= -2 tau, else -tau    max(0, 1 + t/(2 tau))
softplus   2 tau log(1 + exp(t/tau)) - 2 tau log 2      2 / (1 + exp(-t/tau))
=========  ===========================================  ==============================
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, xlogy

from .errors import ConfigError, DivergenceOverflow

KINDS = ("balanced", "kl", "chi2", "softplus")

_EXP_LIMIT = 700.0
_LOG2 = float(np.log(2.0))


@dataclass(frozen=True)
class Divergence:
    kind: str = "balanced"
    tau: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown divergence {self.kind!r}; expected one of {KINDS}")
        if not (self.tau > 0 and np.isfinite(self.tau)):
            raise ConfigError(f"tau must be positive and finite, got {self.tau!r}")

    @classmethod
    def from_config(cls, kind: str, tau: float = 1.0) -> "Divergence":
        return cls(str(kind).lower(), float(tau))

    @property
    def is_balanced(self) -> bool:
        return self.kind == "balanced"

    def _scaled(self, t):
        s = np.asarray(t, dtype=np.float64) / self.tau
        if self.kind == "kl":
            bad = s > _EXP_LIMIT
            if np.any(bad):
                worst = float(np.max(np.asarray(t, dtype=np.float64)[bad]))
                raise DivergenceOverflow(worst, self.tau)
        return s

    def conj(self, t):
        """Convex conjugate evaluated elementwise."""
        tau = self.tau
        if self.kind == "balanced":
            return np.asarray(t, dtype=np.float64) * 1.0
        s = self._scaled(t)
        if self.kind == "kl":
            return tau * np.expm1(s)
        if self.kind == "chi2":
            return np.where(s >= -2.0, tau * (s + 0.25 * s * s), -tau)
        return 2.0 * tau * (np.logaddexp(0.0, s) - _LOG2)

    def conj_grad(self, t):
        """Derivative of :meth:`conj`; the optimal density ratio."""
        if self.kind == "balanced":
            return np.ones_like(np.asarray(t, dtype=np.float64))
        s = self._scaled(t)
        if self.kind == "kl":
            return np.exp(s)
        if self.kind == "chi2":
            return np.maximum(0.0, 1.0 + 0.5 * s)
        return 2.0 * expit(s)

    def primal(self, u):
        """Generator ``psi(u)`` (``inf`` outside its domain)."""
        u = np.asarray(u, dtype=np.float64)
        tau = self.tau
        if self.kind == "balanced":
            return np.where(u == 1.0, 0.0, np.inf)
        if self.kind == "kl":
            return np.where(u >= 0, tau * (xlogy(u, u) - u + 1.0), np.inf)
        if self.kind == "chi2":
            return np.where(u >= 0, tau * (u - 1.0) ** 2, np.inf)
        p = u / 2.0
        inside = (p >= 0) & (p <= 1)
        pc = np.clip(p, 0.0, 1.0)
        val = 2.0 * tau * (xlogy(pc, pc) + xlogy(1.0 - pc, 1.0 - pc) + _LOG2)
        return np.where(inside, val, np.inf)

    def __str__(self) -> str:
        return self.kind if self.is_balanced else f"{self.kind}(tau={self.tau:g})"


def conj(d: Divergence, t):
    return d.conj(t)


def conj_grad(d: Divergence, t):
    return d.conj_grad(t)
