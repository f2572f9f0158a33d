"""Reverse-mode automatic differentiation over float64 numpy arrays.

Deliberately small: just the operations the pointer network needs, each with
a hand-written backward rule.  Build a computation out of Tensor objects,
call backward(loss), then read .grad off the tensors created with
requires_grad=True.  Gradients accumulate, so reuse of a tensor in several
places is fine; fresh wrappers should be made per training step.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    """A float64 array plus the tape hooks needed to backpropagate through it."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_bwd")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _bwd=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._bwd = _bwd

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # arithmetic; scalars and ndarrays on either side are wrapped as constants

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, scalar):
        return mul(self, 1.0 / float(scalar))

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis: int | None = None) -> "Tensor":
        out = self.data.sum(axis=axis)

        def bwd(g):
            if axis is None:
                _accum(self, np.ones_like(self.data) * g)
            else:
                _accum(self, np.broadcast_to(np.expand_dims(g, axis),
                                             self.data.shape))
        return _result(out, (self,), bwd)

    def mean(self, axis: int | None = None) -> "Tensor":
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis) * (1.0 / n)

    def reshape(self, *shape) -> "Tensor":
        out = self.data.reshape(*shape)

        def bwd(g):
            _accum(self, g.reshape(self.data.shape))
        return _result(out, (self,), bwd)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data, parents, bwd) -> Tensor:
    if any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, _parents=parents, _bwd=bwd)
    return Tensor(data)


def _accum(t: Tensor, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = a.data + b.data

    def bwd(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))
    return _result(out, (a, b), bwd)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = a.data * b.data

    def bwd(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))
    return _result(out, (a, b), bwd)


def matmul(a, b) -> Tensor:
    """Matrix product; supports (m,k)@(k,n) and batched (B,m,k)@(k,n)."""
    a, b = _wrap(a), _wrap(b)
    out = a.data @ b.data

    def bwd(g):
        if a.requires_grad:
            _accum(a, g @ b.data.T)
        if b.requires_grad:
            if a.data.ndim > 2:
                flat_a = a.data.reshape(-1, a.data.shape[-1])
                flat_g = g.reshape(-1, g.shape[-1])
                _accum(b, flat_a.T @ flat_g)
            else:
                _accum(b, a.data.T @ g)
    return _result(out, (a, b), bwd)


def tanh(x: Tensor) -> Tensor:
    x = _wrap(x)
    y = np.tanh(x.data)

    def bwd(g):
        _accum(x, g * (1.0 - y * y))
    return _result(y, (x,), bwd)


def sigmoid(x: Tensor) -> Tensor:
    x = _wrap(x)
    # tanh form stays finite for arbitrarily large |x|
    y = 0.5 * (np.tanh(0.5 * x.data) + 1.0)

    def bwd(g):
        _accum(x, g * y * (1.0 - y))
    return _result(y, (x,), bwd)


def relu(x: Tensor) -> Tensor:
    x = _wrap(x)
    y = np.maximum(x.data, 0.0)

    def bwd(g):
        _accum(x, g * (x.data > 0.0))
    return _result(y, (x,), bwd)


def log_softmax(x: Tensor) -> Tensor:
    """Log of softmax along the last axis, max-shifted for stability.

    Entries pushed far negative (masking) get probability exactly 0 after
    exponentiation and contribute exactly 0 gradient.
    """
    x = _wrap(x)
    z = x.data - x.data.max(axis=-1, keepdims=True)
    y = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))

    def bwd(g):
        _accum(x, g - np.exp(y) * g.sum(axis=-1, keepdims=True))
    return _result(y, (x,), bwd)


def slice_last(x: Tensor, lo: int, hi: int) -> Tensor:
    """x[..., lo:hi] as a differentiable view copy."""
    x = _wrap(x)
    out = x.data[..., lo:hi]

    def bwd(g):
        gx = np.zeros_like(x.data)
        gx[..., lo:hi] = g
        _accum(x, gx)
    return _result(out, (x,), bwd)


def take_per_row(x: Tensor, idx) -> Tensor:
    """Pick one entry (or one row) per leading-axis row: x[i, idx[i], ...]."""
    x = _wrap(x)
    idx = np.asarray(idx, dtype=np.int64)
    rows = np.arange(x.data.shape[0])
    out = x.data[rows, idx]

    def bwd(g):
        gx = np.zeros_like(x.data)
        gx[rows, idx] = g
        _accum(x, gx)
    return _result(out, (x,), bwd)


def take_step(x: Tensor, t: int) -> Tensor:
    """x[:, t] for a (B, T, ...) tensor: one time step across the batch."""
    x = _wrap(x)
    out = x.data[:, t]

    def bwd(g):
        gx = np.zeros_like(x.data)
        gx[:, t] = g
        _accum(x, gx)
    return _result(out, (x,), bwd)


def stack_steps(xs) -> Tensor:
    """Stack a list of (B, ...) tensors along a new axis 1, giving (B, len, ...)."""
    xs = [_wrap(x) for x in xs]
    out = np.stack([x.data for x in xs], axis=1)

    def bwd(g):
        for i, x in enumerate(xs):
            _accum(x, g[:, i])
    return _result(out, tuple(xs), bwd)


def dot_last(x: Tensor, v: Tensor) -> Tensor:
    """Contract the last axis of x with vector v: (..., D) x (D,) -> (...)."""
    x, v = _wrap(x), _wrap(v)
    out = x.data @ v.data

    def bwd(g):
        if x.requires_grad:
            _accum(x, g[..., None] * v.data)
        if v.requires_grad:
            flat_x = x.data.reshape(-1, x.data.shape[-1])
            _accum(v, flat_x.T @ g.reshape(-1))
    return _result(out, (x, v), bwd)


def backward(root: Tensor) -> None:
    """Backpropagate from root, filling .grad on every tensor that requires it.

    root is usually a scalar loss; for non-scalars the seed gradient is all
    ones.  Nodes are visited in reverse topological order, so shared
    subexpressions accumulate correctly.
    """
    if not root.requires_grad:
        raise ValueError("backward target does not require gradients")
    topo: list[Tensor] = []
    visited = {id(root)}
    stack: list[tuple[Tensor, object]] = [(root, iter(root._parents))]
    while stack:
        node, parents = stack[-1]
        pushed = False
        for p in parents:
            if p.requires_grad and id(p) not in visited:
                visited.add(id(p))
                stack.append((p, iter(p._parents)))
                pushed = True
                break
        if not pushed:
            topo.append(node)
            stack.pop()
    root.grad = np.ones_like(root.data)
    for node in reversed(topo):
        if node._bwd is not None and node.grad is not None:
            node._bwd(node.grad)
