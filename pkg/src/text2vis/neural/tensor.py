"""Minimal reverse-mode autodiff over numpy arrays.

Only the operations the model needs are implemented. Backward passes
accumulate into .grad; backward() walks the graph in reverse topological
order. Dtype follows the leaf arrays (float32 for training, float64 for
the finite-difference shadow in gradient checks).
"""

from __future__ import annotations

import numpy as np

__all__ = ["Tensor", "concat", "embedding"]


class ShapeError(ValueError):
    pass


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcast gradient back to the operand's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False,
                 parents: tuple = (), backward=None):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def _ensure_grad(self) -> np.ndarray:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        return self.grad

    # ---- graph walk ----

    def backward(self) -> None:
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    # ---- arithmetic ----

    def _lift(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        # scalars follow the tensor's dtype so float32 graphs stay float32
        return Tensor(np.asarray(other, dtype=self.data.dtype))

    def __add__(self, other):
        other = self._lift(other)
        out = Tensor(self.data + other.data, parents=(self, other))

        def back(g):
            if self.requires_grad:
                self._ensure_grad().__iadd__(_unbroadcast(g, self.shape))
            if other.requires_grad:
                other._ensure_grad().__iadd__(_unbroadcast(g, other.shape))
        out._backward = back
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor(-self.data, parents=(self,))

        def back(g):
            if self.requires_grad:
                self._ensure_grad().__isub__(_unbroadcast(g, self.shape))
        out._backward = back
        return out

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __mul__(self, other):
        other = self._lift(other)
        out = Tensor(self.data * other.data, parents=(self, other))

        def back(g):
            if self.requires_grad:
                self._ensure_grad().__iadd__(_unbroadcast(g * other.data, self.shape))
            if other.requires_grad:
                other._ensure_grad().__iadd__(_unbroadcast(g * self.data, other.shape))
        out._backward = back
        return out

    __rmul__ = __mul__

    def __matmul__(self, other):
        other = self._lift(other)
        out = Tensor(self.data @ other.data, parents=(self, other))

        def back(g):
            a, b = self.data, other.data
            if self.requires_grad:
                if a.ndim == 1 and b.ndim == 1:
                    da = g * b
                elif a.ndim == 1:           # (n,) @ (..., n, m) -> (..., m)
                    da = b @ g
                elif b.ndim == 1:           # (..., n, m) @ (m,) -> (..., n)
                    da = np.expand_dims(g, -1) * b
                else:
                    da = g @ b.swapaxes(-1, -2)
                self._ensure_grad().__iadd__(_unbroadcast(da, a.shape))
            if other.requires_grad:
                if a.ndim == 1 and b.ndim == 1:
                    db = g * a
                elif a.ndim == 1:           # db[i, j] = a[i] * g[j]
                    db = np.outer(a, g)
                elif b.ndim == 1:           # db[j] = sum a[..., r, j] g[..., r]
                    db = np.einsum("...rj,...r->j", a, g)
                else:
                    db = a.swapaxes(-1, -2) @ g
                other._ensure_grad().__iadd__(_unbroadcast(db, b.shape))
        out._backward = back
        return out

    def __truediv__(self, other):
        other = self._lift(other)
        return self * other.pow(-1.0)

    def pow(self, exponent: float) -> "Tensor":
        out = Tensor(self.data ** exponent, parents=(self,))

        def back(g):
            if self.requires_grad:
                self._ensure_grad().__iadd__(
                    g * exponent * self.data ** (exponent - 1.0))
        out._backward = back
        return out

    def sqrt(self) -> "Tensor":
        return self.pow(0.5)

    # ---- nonlinearities ----

    def tanh(self) -> "Tensor":
        y = np.tanh(self.data)
        out = Tensor(y, parents=(self,))

        def back(g):
            if self.requires_grad:
                self._ensure_grad().__iadd__(g * (1.0 - y * y))
        out._backward = back
        return out

    def sigmoid(self) -> "Tensor":
        # exp(-x) may overflow to inf for very negative x; the result then
        # saturates to exactly 0, which is the right answer — no warning.
        with np.errstate(over="ignore"):
            y = 1.0 / (1.0 + np.exp(-self.data))
        out = Tensor(y, parents=(self,))

        def back(g):
            if self.requires_grad:
                self._ensure_grad().__iadd__(g * y * (1.0 - y))
        out._backward = back
        return out

    def relu(self) -> "Tensor":
        y = np.maximum(self.data, 0.0)
        out = Tensor(y, parents=(self,))

        def back(g):
            if self.requires_grad:
                self._ensure_grad().__iadd__(g * (self.data > 0))
        out._backward = back
        return out

    def exp(self) -> "Tensor":
        y = np.exp(self.data)
        out = Tensor(y, parents=(self,))

        def back(g):
            if self.requires_grad:
                self._ensure_grad().__iadd__(g * y)
        out._backward = back
        return out

    def log(self) -> "Tensor":
        out = Tensor(np.log(self.data), parents=(self,))

        def back(g):
            if self.requires_grad:
                self._ensure_grad().__iadd__(g / self.data)
        out._backward = back
        return out

    def softmax(self, axis: int = -1) -> "Tensor":
        shifted = self.data - self.data.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=axis, keepdims=True)
        out = Tensor(y, parents=(self,))

        def back(g):
            if self.requires_grad:
                dot = (g * y).sum(axis=axis, keepdims=True)
                self._ensure_grad().__iadd__(y * (g - dot))
        out._backward = back
        return out

    # ---- reductions / reshaping ----

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims), parents=(self,))

        def back(g):
            if not self.requires_grad:
                return
            if axis is None:
                self._ensure_grad().__iadd__(np.broadcast_to(g, self.shape))
                return
            if not keepdims:
                g = np.expand_dims(g, axis)
            self._ensure_grad().__iadd__(np.broadcast_to(g, self.shape))
        out._backward = back
        return out

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def reshape(self, *shape) -> "Tensor":
        out = Tensor(self.data.reshape(*shape), parents=(self,))

        def back(g):
            if self.requires_grad:
                self._ensure_grad().__iadd__(g.reshape(self.shape))
        out._backward = back
        return out

    def transpose(self, *axes) -> "Tensor":
        axes = axes or tuple(reversed(range(self.data.ndim)))
        out = Tensor(self.data.transpose(axes), parents=(self,))
        inverse = np.argsort(axes)

        def back(g):
            if self.requires_grad:
                self._ensure_grad().__iadd__(g.transpose(inverse))
        out._backward = back
        return out

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def __getitem__(self, idx) -> "Tensor":
        out = Tensor(self.data[idx], parents=(self,))

        def back(g):
            if self.requires_grad:
                grad = self._ensure_grad()
                np.add.at(grad, idx, g)
        out._backward = back
        return out


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis),
                 parents=tuple(tensors))
    sizes = [t.data.shape[axis] for t in tensors]

    def back(g):
        offset = 0
        for t, size in zip(tensors, sizes):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(offset, offset + size)
                t._ensure_grad().__iadd__(g[tuple(sl)])
            offset += size
    out._backward = back
    return out


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row gather with scatter-add backward."""
    ids = np.asarray(ids, dtype=np.int64)
    out = Tensor(table.data[ids], parents=(table,))

    def back(g):
        if table.requires_grad:
            np.add.at(table._ensure_grad(), ids, g)
    out._backward = back
    return out
