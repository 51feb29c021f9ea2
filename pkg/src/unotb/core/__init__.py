"""Tensor tape, MLP layers, Adam, and checkpoint I/O."""

from .adam import AdamState, clip_grad_norm
from .checkpoint import load as load_checkpoint
from .checkpoint import save as save_checkpoint
from .mlp import Mlp
from .tape import Parameter, Tape, Tensor, concat, linear, no_tape

__all__ = [
    "AdamState",
    "Mlp",
    "Parameter",
    "Tape",
    "Tensor",
    "clip_grad_norm",
    "concat",
    "linear",
    "load_checkpoint",
    "no_tape",
    "save_checkpoint",
]
