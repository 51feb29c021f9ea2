"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class UnotbError(Exception):
    """Base class for all package errors."""


class ShapeError(UnotbError, ValueError):
    """Operand dimensions do not agree."""


class ConfigError(UnotbError, ValueError):
    """Invalid configuration value or file."""


class NumericError(UnotbError, ArithmeticError):
    """A computation produced a non-finite or otherwise unusable value."""


class DivergenceOverflow(NumericError):
    """The exponential inside a conjugate would overflow."""

    def __init__(self, t: float, tau: float):
        self.t = t
        self.tau = tau
        super().__init__(f"conjugate overflow: t={t!r} exceeds 700*tau (tau={tau!r})")


class ConvergenceError(NumericError):
    """An iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, msg: str, residual: float):
        self.residual = residual
        super().__init__(f"{msg} (residual={residual:.3e})")


class TrainingDiverged(NumericError):
    """Loss magnitude exceeded the abort threshold during training."""
