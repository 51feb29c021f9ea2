from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import ShapeError
from .tape import Parameter, Tape, Tensor, linear, no_tape


class Mlp:
    """Fully connected network: ReLU on hidden layers, linear output.

    Weights are stored ``(fan_in, fan_out)`` so a batch ``x`` of shape
    ``(n, fan_in)`` maps as ``x @ W + b``.
    """

    def __init__(
        self,
        widths: Sequence[int],
        rng: np.random.Generator | None = None,
        name: str = "mlp",
        activations: Sequence[str] | None = None,
    ):
        widths = [int(w) for w in widths]
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ShapeError(f"need at least two positive widths, got {widths}")
        n_layers = len(widths) - 1
        if activations is None:
            activations = ["relu"] * (n_layers - 1) + ["none"]
        if len(activations) != n_layers or any(a not in ("relu", "none") for a in activations):
            raise ValueError(f"bad activations {activations!r} for {n_layers} layers")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.name = name
        self.widths = widths
        self.activations = list(activations)
        self.weights: list[Parameter] = []
        self.biases: list[Parameter] = []
        for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(
                Parameter(f"{name}.{i}.W", rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            )
            self.biases.append(Parameter(f"{name}.{i}.b", np.zeros(fan_out)))

    @property
    def parameters(self) -> list[Parameter]:
        out: list[Parameter] = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @property
    def in_dim(self) -> int:
        return self.widths[0]

    @property
    def out_dim(self) -> int:
        return self.widths[-1]

    def forward(self, x: Tensor | np.ndarray, tape: Tape | None = None) -> Tensor:
        tape = tape if tape is not None else no_tape()
        h = x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))
        if h.data.ndim == 1:
            h = h.reshape(1, -1)
        for i, (w, b, act) in enumerate(zip(self.weights, self.biases, self.activations)):
            if h.data.shape[-1] != w.data.shape[0]:
                raise ShapeError(
                    f"{self.name}: layer {i} expects last dim {w.data.shape[0]}, got {h.data.shape[-1]}"
                )
            # hidden outputs feed only the next layer, whose input gradient is fresh
            h = linear(h, tape.param(w), tape.param(b), relu=act == "relu", owned_grad=i + 1 < len(self.weights))
        return h

    __call__ = forward

    def state(self) -> dict[str, np.ndarray]:
        return {p.name: p.data for p in self.parameters}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for p in self.parameters:
            arr = np.asarray(state[p.name], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise ShapeError(f"{p.name}: checkpoint shape {arr.shape} != {p.data.shape}")
            p.data[...] = arr
