"""Semi-unbalanced optimal transport barycenters with neural potentials and maps."""

__version__ = "0.1.0"

from .cost import CostFn
from .divergence import Divergence
from .errors import (
    ConfigError,
    ConvergenceError,
    DivergenceOverflow,
    NumericError,
    ShapeError,
    TrainingDiverged,
    UnotbError,
)
from .model import MapBank, PotentialBank
from .trainer import BarycenterConfig, TrainReport, train

__all__ = [
    "BarycenterConfig",
    "ConfigError",
    "ConvergenceError",
    "CostFn",
    "Divergence",
    "DivergenceOverflow",
    "MapBank",
    "NumericError",
    "PotentialBank",
    "ShapeError",
    "TrainReport",
    "TrainingDiverged",
    "UnotbError",
    "train",
]
