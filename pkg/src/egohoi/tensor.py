"""Minimal reverse-mode autodiff over float64 numpy arrays.

Each operation records a backward closure on its output node; calling
``backward()`` on a scalar walks the recorded graph in reverse topological
order and accumulates gradients into every node that requires them. Desk
scale only: no fusion, no views, everything materialized in float64.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ShapeError

Array = np.ndarray


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Reduce a broadcasted gradient back to `shape` by summing."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """Dense n-d array node in the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data: Array = np.asarray(data, dtype=np.float64)
        self.grad: Optional[Array] = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Optional[Callable[[Array], None]] = None

    # -- basic introspection --------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # -- graph plumbing ---------------------------------------------------
    def _accumulate(self, g: Array) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def backward(self) -> None:
        if self.data.size != 1:
            raise ShapeError(f"backward() needs a scalar, got shape {self.shape}")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- operator sugar ---------------------------------------------------
    def __add__(self, other):
        return add(self, as_tensor(other))

    def __radd__(self, other):
        return add(as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, as_tensor(other))

    def __rsub__(self, other):
        return sub(as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, as_tensor(other))

    def __rmul__(self, other):
        return mul(as_tensor(other), self)

    def __truediv__(self, other):
        return div(self, as_tensor(other))

    def __rtruediv__(self, other):
        return div(as_tensor(other), self)

    def __matmul__(self, other):
        return matmul(self, as_tensor(other))

    def __neg__(self):
        return mul(self, as_tensor(-1.0))


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data: Array, parents: Sequence[Tensor], backward: Callable[[Array], None]) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


# -- arithmetic -----------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.shape))

    return _node(a.data + b.data, (a, b), bw)


def sub(a: Tensor, b: Tensor) -> Tensor:
    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g, b.shape))

    return _node(a.data - b.data, (a, b), bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return _node(a.data * b.data, (a, b), bw)


def div(a: Tensor, b: Tensor) -> Tensor:
    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(_unbroadcast(g / b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return _node(a.data / b.data, (a, b), bw)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul expects 2-d operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} vs {b.shape}")

    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return _node(a.data @ b.data, (a, b), bw)


def transpose(a: Tensor) -> Tensor:
    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(g.T)

    return _node(a.data.T, (a,), bw)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(g.reshape(a.shape))

    return _node(a.data.reshape(shape), (a,), bw)


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def bw(g: Array) -> None:
        for part, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if part.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(int(lo), int(hi))
                part._accumulate(g[tuple(idx)])

    return _node(np.concatenate([p.data for p in parts], axis=axis), tuple(parts), bw)


def narrow(a: Tensor, axis: int, start: int, stop: int) -> Tensor:
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, stop)
    idx_t = tuple(idx)

    def bw(g: Array) -> None:
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[idx_t] = g
            a._accumulate(full)

    return _node(a.data[idx_t].copy(), (a,), bw)


def take_rows(a: Tensor, indices: Sequence[int]) -> Tensor:
    idx = np.asarray(indices, dtype=np.intp)

    def bw(g: Array) -> None:
        if a.requires_grad:
            full = np.zeros_like(a.data)
            np.add.at(full, idx, g)
            a._accumulate(full)

    return _node(a.data[idx].copy(), (a,), bw)


def tile_rows(a: Tensor, n: int) -> Tensor:
    """Repeat a 1-d tensor as n identical rows."""
    if a.data.ndim != 1:
        raise ShapeError(f"tile_rows expects a vector, got shape {a.shape}")

    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(g.sum(axis=0))

    return _node(np.tile(a.data, (n, 1)), (a,), bw)


def tsum(a: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    def bw(g: Array) -> None:
        if not a.requires_grad:
            return
        if axis is None:
            a._accumulate(np.full_like(a.data, float(g)))
        else:
            ge = g if keepdims else np.expand_dims(g, axis)
            a._accumulate(np.broadcast_to(ge, a.shape).copy())

    return _node(a.data.sum(axis=axis, keepdims=keepdims), (a,), bw)


def tmean(a: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    count = a.data.size if axis is None else a.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), as_tensor(1.0 / count))


# -- elementwise nonlinearities -------------------------------------------


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0.0

    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(g * mask)

    return _node(np.where(mask, a.data, 0.0), (a,), bw)


def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)

    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(g * out_data)

    return _node(out_data, (a,), bw)


def log(a: Tensor) -> Tensor:
    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(g / a.data)

    return _node(np.log(a.data), (a,), bw)


def sqrt(a: Tensor) -> Tensor:
    out_data = np.sqrt(a.data)

    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(g * 0.5 / out_data)

    return _node(out_data, (a,), bw)


def power(a: Tensor, exponent: float) -> Tensor:
    """Elementwise a**exponent for a constant exponent; base must be >= 0."""
    if exponent == 0.0:
        return _node(np.ones_like(a.data), (a,), lambda g: None)
    out_data = np.power(a.data, exponent)

    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(g * exponent * np.power(a.data, exponent - 1.0))

    return _node(out_data, (a,), bw)


def absolute(a: Tensor) -> Tensor:
    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(g * np.sign(a.data))

    return _node(np.abs(a.data), (a,), bw)


def maximum(a: Tensor, b: Tensor) -> Tensor:
    a_wins = a.data >= b.data

    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * a_wins, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * ~a_wins, b.shape))

    return _node(np.maximum(a.data, b.data), (a, b), bw)


def minimum(a: Tensor, b: Tensor) -> Tensor:
    a_wins = a.data <= b.data

    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * a_wins, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * ~a_wins, b.shape))

    return _node(np.minimum(a.data, b.data), (a, b), bw)


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    inside = (a.data > lo) & (a.data < hi)

    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(g * inside)

    return _node(np.clip(a.data, lo, hi), (a,), bw)


def sigmoid(a: Tensor) -> Tensor:
    """Numerically stable logistic function, exact for |x| <= 700."""
    x = a.data
    out_data = np.where(x >= 0.0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))

    def bw(g: Array) -> None:
        if a.requires_grad:
            a._accumulate(g * out_data * (1.0 - out_data))

    return _node(out_data, (a,), bw)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def bw(g: Array) -> None:
        if a.requires_grad:
            dot = (g * out_data).sum(axis=axis, keepdims=True)
            a._accumulate(out_data * (g - dot))

    return _node(out_data, (a,), bw)


def stop_gradient(a: Tensor) -> Tensor:
    return Tensor(a.data.copy())


def check_finite(a: Tensor, label: str = "tensor") -> Tensor:
    if not np.all(np.isfinite(a.data)):
        raise FloatingPointError(f"{label} contains non-finite values")
    return a


def l2_norm(values: Sequence[Array]) -> float:
    total = 0.0
    for v in values:
        total += float(np.sum(v * v))
    return math.sqrt(total)
