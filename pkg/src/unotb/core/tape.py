"""Reverse-mode differentiation over an explicit computation tape.

A :class:`Tape` records every primitive applied to tracked tensors in
creation order, which is already a topological order, so ``backward`` is a
single reversed sweep. Only tensors derived from *watched* parameters are
tracked; everything else is a constant and costs nothing at backward time.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .. import kernels
from ..errors import ShapeError

__all__ = ["Parameter", "Tensor", "Tape", "no_tape"]


class Parameter:
    """A named, trainable float64 array."""

    __slots__ = ("name", "data", "grad")

    def __init__(self, name: str, data):
        self.name = name
        self.data = np.array(data, dtype=np.float64)
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.data.shape})"


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """Array value plus, when tracked, its node index on a tape."""

    __slots__ = ("data", "tape", "node")
    __array_priority__ = 100.0

    def __init__(self, data, tape: "Tape | None" = None, node: int = -1):
        self.data = data if isinstance(data, np.ndarray) else np.asarray(data, dtype=np.float64)
        self.tape = tape
        self.node = node

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def requires_grad(self) -> bool:
        return self.node >= 0

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, node={self.node})"

    # -- helpers ---------------------------------------------------------
    def _tape(self, other=None) -> "Tape":
        if self.tape is not None:
            return self.tape
        if isinstance(other, Tensor) and other.tape is not None:
            return other.tape
        return _NULL_TAPE

    def _binary(self, other, fwd, vjp_a, vjp_b) -> "Tensor":
        b = other if isinstance(other, Tensor) else Tensor(np.asarray(other, dtype=np.float64))
        a = self
        out = fwd(a.data, b.data)

        def vjp(g, needs):
            ga = _unbroadcast(vjp_a(g, a.data, b.data), a.data.shape) if needs[0] else None
            gb = _unbroadcast(vjp_b(g, a.data, b.data), b.data.shape) if needs[1] else None
            return ga, gb

        return self._tape(b).record(out, (a, b), vjp)

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        return self._binary(other, np.add, lambda g, a, b: g, lambda g, a, b: g)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract, lambda g, a, b: g, lambda g, a, b: -g)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        return self._binary(other, np.multiply, lambda g, a, b: g * b, lambda g, a, b: g * a)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(
            other, np.divide, lambda g, a, b: g / b, lambda g, a, b: -g * a / (b * b)
        )

    def __neg__(self):
        return self._tape().record(-self.data, (self,), lambda g, needs: (-g,))

    def __matmul__(self, other):
        return self._binary(
            other, np.matmul, lambda g, a, b: g @ b.T, lambda g, a, b: a.T @ g
        )

    # -- reductions and shape ops -----------------------------------------
    def sum(self, axis: int | None = None) -> "Tensor":
        shape = self.data.shape

        def vjp(g, needs):
            if axis is None:
                return (np.broadcast_to(g, shape).copy(),)
            return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

        return self._tape().record(np.asarray(self.data.sum(axis=axis)), (self,), vjp)

    def mean(self, axis: int | None = None) -> "Tensor":
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis) * (1.0 / n)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        orig = self.data.shape
        return self._tape().record(
            self.data.reshape(shape), (self,), lambda g, needs: (g.reshape(orig),)
        )

    # -- elementwise -----------------------------------------------------
    def relu(self) -> "Tensor":
        out = np.maximum(self.data, 0.0)
        return self._tape().record(out, (self,), lambda g, needs: (g * (out > 0),))

    def exp(self) -> "Tensor":
        out = np.exp(self.data)
        return self._tape().record(out, (self,), lambda g, needs: (g * out,))

    def square(self) -> "Tensor":
        x = self.data
        return self._tape().record(x * x, (self,), lambda g, needs: (2.0 * g * x,))

    def apply(self, fn: Callable[[np.ndarray], np.ndarray], dfn: Callable[[np.ndarray], np.ndarray]) -> "Tensor":
        """Elementwise ``fn`` whose derivative is ``dfn``."""
        x = self.data
        return self._tape().record(fn(x), (self,), lambda g, needs: (g * dfn(x),))


class Tape:
    """Ordered record of primitive ops.

    Parameters passed to ``watch`` (or later :meth:`watch`) become leaves;
    ``enabled=False`` gives a tape that tracks nothing, so forward passes run
    the exact same numpy calls without recording.
    """

    def __init__(self, watch: Iterable[Parameter] = (), enabled: bool = True):
        self.enabled = enabled
        self._parents: list[tuple[int, ...]] = []
        self._vjps: list[Callable | None] = []
        self._leaf_of: dict[int, int] = {}
        self._params: dict[int, Parameter] = {}
        self._watched: dict[int, Parameter] = {}
        self.watch(*watch)

    def __len__(self) -> int:
        return len(self._vjps)

    def watch(self, *params: Parameter) -> None:
        for p in params:
            self._watched[id(p)] = p

    def constant(self, data) -> Tensor:
        return Tensor(np.asarray(data, dtype=np.float64), self)

    def param(self, p: Parameter) -> Tensor:
        """Tensor view of ``p``; a leaf node if ``p`` is watched."""
        if not self.enabled or id(p) not in self._watched:
            return Tensor(p.data, self)
        node = self._leaf_of.get(id(p))
        if node is None:
            node = len(self._vjps)
            self._parents.append(())
            self._vjps.append(None)
            self._leaf_of[id(p)] = node
            self._params[node] = p
        return Tensor(p.data, self, node)

    def record(self, data: np.ndarray, parents: Sequence[Tensor], vjp: Callable) -> Tensor:
        if not self.enabled or all(p.node < 0 for p in parents):
            return Tensor(data, self if self.enabled else None)
        node = len(self._vjps)
        self._parents.append(tuple(p.node for p in parents))
        self._vjps.append(vjp)
        return Tensor(data, self, node)

    def backward(self, loss: Tensor) -> dict[Parameter, np.ndarray]:
        """Gradients of scalar ``loss`` w.r.t. every watched parameter.

        Parameters the loss does not depend on get zero gradients. Each
        parameter's ``grad`` attribute is set as a side effect.
        """
        if loss.data.size != 1:
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.data.shape}")
        grads: list[np.ndarray | None] = [None] * len(self._vjps)
        if loss.node >= 0:
            if loss.tape is not self:
                raise ValueError("loss was recorded on a different tape")
            grads[loss.node] = np.ones_like(loss.data)
        for i in range(len(self._vjps) - 1, -1, -1):
            g = grads[i]
            vjp = self._vjps[i]
            if g is None or vjp is None:
                continue
            parents = self._parents[i]
            needs = tuple(p >= 0 for p in parents)
            for p, gp in zip(parents, vjp(g, needs)):
                if p < 0 or gp is None:
                    continue
                grads[p] = gp if grads[p] is None else grads[p] + gp
            grads[i] = None
        out: dict[Parameter, np.ndarray] = {}
        for p in self._watched.values():
            node = self._leaf_of.get(id(p))
            g = grads[node] if node is not None else None
            g = np.zeros_like(p.data) if g is None else g.reshape(p.data.shape)
            p.grad = g
            out[p] = g
        return out


_NULL_TAPE = Tape(enabled=False)


def no_tape() -> Tape:
    """A tape that records nothing."""
    return _NULL_TAPE


# -- multi-input primitives ----------------------------------------------------


def linear(x: Tensor, w: Tensor, b: Tensor | None = None, relu: bool = False, owned_grad: bool = False) -> Tensor:
    """Fused ``x @ w + b`` (optionally followed by ReLU); skips products nobody needs.

    ``owned_grad`` promises that the output's only consumer hands back a fresh
    gradient array, so the ReLU mask may overwrite it.
    """
    xd, wd = x.data, w.data
    out = xd @ wd
    fused = out.ndim == 2 and b is not None
    if fused:
        kernels.bias_relu_(out, b.data, relu)
    else:
        if b is not None:
            out += b.data
        if relu:
            np.maximum(out, 0.0, out=out)
    parents = (x, w) if b is None else (x, w, b)

    def vjp(g, needs):
        gb = None
        if relu and fused:
            g, gb = kernels.relu_backward(g, out, needs[2], inplace=owned_grad)
        elif relu:
            g = np.where(out > 0.0, g, 0.0)
        gx = g @ wd.T if needs[0] else None
        gw = xd.T @ g if needs[1] else None
        if b is None:
            return gx, gw
        if gb is None and needs[2]:
            gb = g.sum(axis=0)
        return gx, gw, gb

    tape = next((t.tape for t in parents if t.tape is not None), _NULL_TAPE)
    return tape.record(out, parents, vjp)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    datas = [t.data for t in tensors]
    out = np.concatenate(datas, axis=axis)
    splits = np.cumsum([d.shape[axis] for d in datas])[:-1]

    def vjp(g, needs):
        return tuple(np.split(g, splits, axis=axis))

    tape = next((t.tape for t in tensors if t.tape is not None), _NULL_TAPE)
    return tape.record(out, tuple(tensors), vjp)
