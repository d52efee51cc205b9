"""Reverse-mode automatic differentiation on numpy arrays.

A micrograd-style tape: every op returns a Tensor holding its value, its
parents, and a closure that routes the incoming gradient to them. backward()
topologically sorts the graph and accumulates gradients into .grad. Double
precision throughout; operators are only the ones the trainer needs.
"""

from __future__ import annotations

import numpy as np

from ..errors import GraphConsistency


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient down to the shape the operand actually had."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = Tensor(a.data + b.data, (a, b))

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(g, b.data.shape))

    out._backward = backward
    return out


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = Tensor(a.data * b.data, (a, b))

    def backward(g):
        _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    out._backward = backward
    return out


def scale(a: Tensor, c: float) -> Tensor:
    out = Tensor(a.data * c, (a,))

    def backward(g):
        _accumulate(a, g * c)

    out._backward = backward
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """a @ b with numpy batching rules (shared weights unbroadcast correctly)."""
    out = Tensor(a.data @ b.data, (a, b))

    def backward(g):
        ga = g @ b.data.swapaxes(-1, -2)
        gb = a.data.swapaxes(-1, -2) @ g
        _accumulate(a, _unbroadcast(ga, a.data.shape))
        _accumulate(b, _unbroadcast(gb, b.data.shape))

    out._backward = backward
    return out


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    out = Tensor(y, (a,))

    def backward(g):
        _accumulate(a, g * (1.0 - y * y))

    out._backward = backward
    return out


def logistic(a: Tensor) -> Tensor:
    y = 1.0 / (1.0 + np.exp(-a.data))
    out = Tensor(y, (a,))

    def backward(g):
        _accumulate(a, g * y * (1.0 - y))

    out._backward = backward
    return out


def concat(parts: list[Tensor], axis: int) -> Tensor:
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis), tuple(parts))
    sizes = [p.data.shape[axis] for p in parts]

    def backward(g):
        offset = 0
        for p, size in zip(parts, sizes):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(offset, offset + size)
            _accumulate(p, g[tuple(sl)])
            offset += size

    out._backward = backward
    return out


def narrow(a: Tensor, key) -> Tensor:
    """Basic slicing; the gradient scatters back into the sliced region."""
    out = Tensor(a.data[key], (a,))

    def backward(g):
        if a.grad is None:
            a.grad = np.zeros_like(a.data)
        a.grad[key] += g

    out._backward = backward
    return out


def stack(parts: list[Tensor], axis: int) -> Tensor:
    out = Tensor(np.stack([p.data for p in parts], axis=axis), tuple(parts))

    def backward(g):
        for i, p in enumerate(parts):
            _accumulate(p, np.take(g, i, axis=axis))

    out._backward = backward
    return out


def expand(a: Tensor, shape: tuple) -> Tensor:
    out = Tensor(np.broadcast_to(a.data, shape).copy(), (a,))

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))

    out._backward = backward
    return out


def embedding(table: Tensor, idx: np.ndarray) -> Tensor:
    """Row lookup; gradients accumulate only into the rows that were used."""
    out = Tensor(table.data[idx], (table,))

    def backward(g):
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, idx, g)

    out._backward = backward
    return out


def masked_softmax(e: Tensor, mask: np.ndarray) -> Tensor:
    """Softmax over the last axis restricted to mask; masked entries get 0."""
    z = np.where(mask, e.data, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    ez = np.exp(z)
    p = ez / ez.sum(axis=-1, keepdims=True)
    out = Tensor(p, (e,))

    def backward(g):
        dot = (g * p).sum(axis=-1, keepdims=True)
        _accumulate(e, p * (g - dot))

    out._backward = backward
    return out


def masked_mse(pred: Tensor, target: np.ndarray, frame_mask: np.ndarray) -> Tensor:
    """Mean squared error over valid frames: pred (B,T,M), mask (B,T)."""
    w = frame_mask[..., None].astype(np.float64)
    denom = float(frame_mask.sum()) * pred.data.shape[-1]
    diff = (pred.data - target) * w
    out = Tensor(np.array((diff * diff).sum() / denom), (pred,))

    def backward(g):
        _accumulate(pred, g * 2.0 * diff / denom)

    out._backward = backward
    return out


def masked_bce_logits(
    logits: Tensor, targets: np.ndarray, frame_mask: np.ndarray
) -> Tensor:
    """Mean binary cross-entropy on logits over valid frames (numerically stable)."""
    z = logits.data
    y = targets.astype(np.float64)
    w = frame_mask.astype(np.float64)
    denom = float(w.sum())
    per = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    out = Tensor(np.array((per * w).sum() / denom), (logits,))

    def backward(g):
        sig = 1.0 / (1.0 + np.exp(-z))
        _accumulate(logits, g * (sig - y) * w / denom)

    out._backward = backward
    return out


def backward(root: Tensor) -> None:
    """Accumulate gradients of a scalar root into every reachable tensor."""
    if root.data.ndim != 0:
        raise GraphConsistency("backward root must be a scalar loss")
    topo: list[Tensor] = []
    visited: set[int] = set()
    stack_ = [(root, False)]
    while stack_:
        node, processed = stack_.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack_.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack_.append((parent, False))
    root.grad = np.ones_like(root.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
