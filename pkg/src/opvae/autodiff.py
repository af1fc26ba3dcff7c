"""Reverse-mode automatic differentiation on dense float64 arrays.

A ``Tensor`` wraps a numpy array and records the operation that produced
it, building a fresh computation graph per forward pass.  Calling
``backward()`` on a scalar result walks the graph in reverse topological
order and accumulates gradients into ``.grad``.  The op set is the small
one needed by tanh multilayer perceptrons, attention pooling and Gaussian
ELBO losses; everything runs in float64 and every reduction has a fixed
accumulation order, so repeated passes over identical inputs are
bit-identical.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, ShapeError

__all__ = ["Tensor", "as_tensor", "concat", "softmax", "backward", "gradients", "grad_check"]


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """Node in the computation graph: value, gradient slot, and backward rule."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    # -- basic introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __float__(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- graph construction helpers -------------------------------------------

    def _make(self, data, parents, backward) -> "Tensor":
        out = Tensor(data)
        out._parents = parents
        out._backward = backward
        return out

    # -- arithmetic ------------------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        out = self._make(self.data + other.data, (self, other), None)

        def back(g):
            return (_unbroadcast(g, self.shape), _unbroadcast(g, other.shape))

        out._backward = back
        return out

    __radd__ = __add__

    def __sub__(self, other):
        other = as_tensor(other)
        out = self._make(self.data - other.data, (self, other), None)

        def back(g):
            return (_unbroadcast(g, self.shape), _unbroadcast(-g, other.shape))

        out._backward = back
        return out

    def __rsub__(self, other):
        return as_tensor(other) - self

    def __mul__(self, other):
        other = as_tensor(other)
        out = self._make(self.data * other.data, (self, other), None)

        def back(g):
            return (
                _unbroadcast(g * other.data, self.shape),
                _unbroadcast(g * self.data, other.shape),
            )

        out._backward = back
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        out = self._make(self.data / other.data, (self, other), None)

        def back(g):
            return (
                _unbroadcast(g / other.data, self.shape),
                _unbroadcast(-g * self.data / (other.data * other.data), other.shape),
            )

        out._backward = back
        return out

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __neg__(self):
        out = self._make(-self.data, (self,), None)
        out._backward = lambda g: (-g,)
        return out

    def __matmul__(self, other):
        other = as_tensor(other)
        if self.data.ndim != 2 or other.data.ndim != 2:
            raise ShapeError(
                f"matmul expects 2-d operands, got {self.data.shape} @ {other.data.shape}"
            )
        if self.data.shape[1] != other.data.shape[0]:
            raise ShapeError(f"matmul inner dims differ: {self.data.shape} @ {other.data.shape}")
        out = self._make(self.data @ other.data, (self, other), None)

        def back(g):
            return (g @ other.data.T, self.data.T @ g)

        out._backward = back
        return out

    # -- elementwise functions ---------------------------------------------------

    def tanh(self):
        t = np.tanh(self.data)
        out = self._make(t, (self,), None)
        out._backward = lambda g: (g * (1.0 - t * t),)
        return out

    def exp(self):
        e = np.exp(self.data)
        out = self._make(e, (self,), None)
        out._backward = lambda g: (g * e,)
        return out

    def log(self):
        out = self._make(np.log(self.data), (self,), None)
        out._backward = lambda g: (g / self.data,)
        return out

    def sqrt(self):
        s = np.sqrt(self.data)
        out = self._make(s, (self,), None)
        out._backward = lambda g: (g * (0.5 / s),)
        return out

    # -- reductions and shaping ----------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        out = self._make(self.data.sum(axis=axis, keepdims=keepdims), (self,), None)
        shape = self.shape

        def back(g):
            if axis is None:
                return (np.broadcast_to(g, shape).copy(),)
            if not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        out._backward = back
        return out

    def mean(self, axis=None, keepdims: bool = False):
        n = self.size if axis is None else self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = self._make(self.data.reshape(shape), (self,), None)
        src = self.shape
        out._backward = lambda g: (g.reshape(src),)
        return out

    def transpose(self):
        if self.data.ndim != 2:
            raise ShapeError(f"transpose expects a 2-d tensor, got shape {self.shape}")
        out = self._make(self.data.T, (self,), None)
        out._backward = lambda g: (g.T,)
        return out

    @property
    def T(self):
        return self.transpose()

    def __getitem__(self, key):
        out = self._make(self.data[key], (self,), None)
        shape = self.shape

        def back(g):
            full = np.zeros(shape, dtype=np.float64)
            full[key] = g
            return (full,)

        out._backward = back
        return out

    # -- backward pass ------------------------------------------------------------

    def backward(self):
        """Accumulate gradients of this scalar into every node of its graph."""
        if self.data.size != 1:
            raise ContractError(f"backward() requires a scalar root, got shape {self.shape}")
        order = _toposort(self)
        for node in order:
            node.grad = np.zeros_like(node.data)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is None:
                continue
            parent_grads = node._backward(node.grad)
            for parent, g in zip(node._parents, parent_grads):
                parent.grad += g


def _toposort(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def as_tensor(value) -> Tensor:
    """Wrap arrays and scalars as constant tensors; pass tensors through."""
    return value if isinstance(value, Tensor) else Tensor(value)


def concat(tensors, axis: int = 0) -> Tensor:
    """Concatenate tensors along `axis`, differentiable in every argument."""
    tensors = [as_tensor(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    out = Tensor(out_data)
    out._parents = tuple(tensors)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def back(g):
        pieces = []
        slicer = [slice(None)] * g.ndim
        for i in range(len(sizes)):
            slicer[axis] = slice(offsets[i], offsets[i + 1])
            pieces.append(g[tuple(slicer)])
        return tuple(pieces)

    out._backward = back
    return out


def softmax(t: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax along `axis`.

    Forward subtracts the row max (exact: softmax is shift-invariant);
    backward applies the softmax Jacobian a * (g - sum(g * a)).
    """
    t = as_tensor(t)
    shifted = t.data - t.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    a = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(a)
    out._parents = (t,)

    def back(g):
        dot = (g * a).sum(axis=axis, keepdims=True)
        return (a * (g - dot),)

    out._backward = back
    return out


def backward(loss: Tensor) -> None:
    """Module-level alias for ``loss.backward()``."""
    as_tensor(loss).backward()


def gradients(loss: Tensor, params) -> list[np.ndarray]:
    """Gradients of a scalar loss with respect to each tensor in `params`.

    Parameters that do not appear in the loss graph get zero gradients.
    Returned arrays are fresh copies, so later passes cannot mutate them.
    """
    loss = as_tensor(loss)
    loss.backward()
    reachable = {id(n) for n in _toposort(loss)}
    out = []
    for p in params:
        if id(p) in reachable and p.grad is not None:
            out.append(p.grad.copy())
        else:
            out.append(np.zeros_like(p.data))
    return out


def grad_check(f, params, step: float = 1e-5, abs_floor: float = 1e-6) -> float:
    """Maximum relative mismatch between backward() and central differences.

    `f` maps the current parameter values to a scalar Tensor and is called
    repeatedly while entries of `params` are perturbed in place.  The
    relative error of a component pair (a, b) is |a - b| / max(|a|, |b|,
    abs_floor); the floor keeps zero-against-roundoff comparisons from
    reporting spurious mismatches the finite-difference oracle cannot
    resolve at the given step.
    """
    analytic = gradients(f(), params)
    worst = 0.0
    for p, g in zip(params, analytic):
        flat = p.data.reshape(-1)
        fd = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = float(f().data)
            flat[i] = orig - step
            down = float(f().data)
            flat[i] = orig
            fd[i] = (up - down) / (2.0 * step)
        ga = g.reshape(-1)
        denom = np.maximum(np.maximum(np.abs(ga), np.abs(fd)), abs_floor)
        worst = max(worst, float(np.max(np.abs(ga - fd) / denom)))
    return worst
