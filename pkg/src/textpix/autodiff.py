"""Minimal reverse-mode automatic differentiation over float64 numpy arrays.

Every value in a computation graph is a :class:`Tensor` wrapping a float64
ndarray. Operations record a backward closure; :meth:`Tensor.backward` runs
an iterative topological sweep and accumulates gradients into the leaves.
64-bit precision is used throughout so analytic gradients can be validated
against central finite differences to tight tolerances.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

_GRAD_ENABLED = True


@contextmanager
def no_grad():
    """Disable graph construction inside the block (inference paths)."""
    global _GRAD_ENABLED
    previous = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = previous


def grad_enabled() -> bool:
    return _GRAD_ENABLED


def _reduce_to(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` over broadcast axes so it matches `shape`."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    """A node in the autodiff graph: float64 values plus optional gradient."""

    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, value, requires_grad: bool = False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    @property
    def size(self):
        return self.value.size

    def item(self) -> float:
        return float(self.value)

    def detach(self) -> "Tensor":
        return Tensor(self.value.copy())

    def _accumulate(self, grad: np.ndarray) -> None:
        if not self.requires_grad:
            return
        grad = _reduce_to(np.asarray(grad, dtype=np.float64), self.value.shape)
        if self.grad is None:
            self.grad = grad.reshape(self.value.shape).copy()
        else:
            self.grad += grad.reshape(self.value.shape)

    def backward(self, grad=None) -> None:
        """Reverse-mode sweep from this node. Iterative; safe for deep scans."""
        if grad is None:
            grad = np.ones_like(self.value)
        # Iterative post-order topological sort over parents.
        topo = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        self._accumulate(grad)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar -----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return take(self, key)

    def sum(self, axis=None, keepdims=False):
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tensor_mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def swapaxes(self, a, b):
        return swapaxes(self, a, b)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


class Parameter(Tensor):
    """A named trainable leaf tensor."""

    __slots__ = ("name",)

    def __init__(self, value, name: str):
        super().__init__(value, requires_grad=True)
        self.name = name

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Parameter({self.name}, shape={self.shape})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _attach(out: Tensor, parents: tuple, backward_fn) -> Tensor:
    """Wire a backward closure if grad mode is on and any parent needs it."""
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    return out


# elementwise arithmetic -------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.value + b.value)

    def backward(g):
        a._accumulate(g)
        b._accumulate(g)

    return _attach(out, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.value - b.value)

    def backward(g):
        a._accumulate(g)
        b._accumulate(-g)

    return _attach(out, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.value * b.value)

    def backward(g):
        a._accumulate(g * b.value)
        b._accumulate(g * a.value)

    return _attach(out, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.value / b.value)

    def backward(g):
        a._accumulate(g / b.value)
        b._accumulate(-g * a.value / (b.value * b.value))

    return _attach(out, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.value @ b.value)

    def backward(g):
        a._accumulate(g @ np.swapaxes(b.value, -1, -2))
        b._accumulate(np.swapaxes(a.value, -1, -2) @ g)

    return _attach(out, (a, b), backward)


# elementwise nonlinearities ----------------------------------------------


def exp(x) -> Tensor:
    x = as_tensor(x)
    value = np.exp(x.value)
    out = Tensor(value)

    def backward(g):
        x._accumulate(g * value)

    return _attach(out, (x,), backward)


def log(x) -> Tensor:
    x = as_tensor(x)
    out = Tensor(np.log(x.value))

    def backward(g):
        x._accumulate(g / x.value)

    return _attach(out, (x,), backward)


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    # Stable logistic: exp of a non-positive argument on both branches.
    v = x.value
    value = np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.abs(v))),
                     np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))
    out = Tensor(value)

    def backward(g):
        x._accumulate(g * value * (1.0 - value))

    return _attach(out, (x,), backward)


def tanh(x) -> Tensor:
    x = as_tensor(x)
    value = np.tanh(x.value)
    out = Tensor(value)

    def backward(g):
        x._accumulate(g * (1.0 - value * value))

    return _attach(out, (x,), backward)


def softplus(x) -> Tensor:
    """log(1 + e^x), computed stably; gradient is the logistic function."""
    x = as_tensor(x)
    out = Tensor(np.logaddexp(0.0, x.value))

    def backward(g):
        v = x.value
        s = np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.abs(v))),
                     np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))
        x._accumulate(g * s)

    return _attach(out, (x,), backward)


_GELU_C = np.sqrt(2.0 / np.pi)


def gelu(x) -> Tensor:
    """GELU, tanh approximation: 0.5*x*(1 + tanh(c*(x + 0.044715*x^3)))."""
    x = as_tensor(x)
    v = x.value
    inner = _GELU_C * (v + 0.044715 * v**3)
    t = np.tanh(inner)
    out = Tensor(0.5 * v * (1.0 + t))

    def backward(g):
        dinner = _GELU_C * (1.0 + 3 * 0.044715 * v * v)
        grad = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * dinner
        x._accumulate(g * grad)

    return _attach(out, (x,), backward)


def leaky_relu(x, slope: float = 0.01) -> Tensor:
    x = as_tensor(x)
    factor = np.where(x.value >= 0, 1.0, slope)
    out = Tensor(x.value * factor)

    def backward(g):
        x._accumulate(g * factor)

    return _attach(out, (x,), backward)


ACTIVATIONS = {
    "gelu": gelu,
    "leaky_relu": leaky_relu,
    "sigmoid": sigmoid,
    "tanh": tanh,
}


def activation(x, kind: str) -> Tensor:
    """Apply a named elementwise activation (gelu, leaky_relu, sigmoid, tanh)."""
    try:
        return ACTIVATIONS[kind](x)
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}; "
                         f"expected one of {sorted(ACTIVATIONS)}") from None


# shape manipulation -------------------------------------------------------


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    old_shape = x.value.shape
    out = Tensor(x.value.reshape(shape))

    def backward(g):
        x._accumulate(g.reshape(old_shape))

    return _attach(out, (x,), backward)


def swapaxes(x, a: int, b: int) -> Tensor:
    x = as_tensor(x)
    out = Tensor(np.swapaxes(x.value, a, b))

    def backward(g):
        x._accumulate(np.swapaxes(g, a, b))

    return _attach(out, (x,), backward)


def take(x, key) -> Tensor:
    """Basic indexing/slicing with scatter-add backward."""
    x = as_tensor(x)
    out = Tensor(x.value[key])

    def backward(g):
        full = np.zeros_like(x.value)
        np.add.at(full, key, g)
        x._accumulate(full)

    return _attach(out, (x,), backward)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([t.value for t in tensors], axis=axis))
    sizes = [t.value.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            index = [slice(None)] * g.ndim
            index[axis] = slice(start, stop)
            t._accumulate(g[tuple(index)])

    return _attach(out, tuple(tensors), backward)


def pad_axis(x, axis: int, before: int, after: int) -> Tensor:
    """Zero-pad along one axis; backward slices the original region back out."""
    x = as_tensor(x)
    pads = [(0, 0)] * x.ndim
    pads[axis] = (before, after)
    out = Tensor(np.pad(x.value, pads))
    n = x.value.shape[axis]

    def backward(g):
        index = [slice(None)] * g.ndim
        index[axis] = slice(before, before + n)
        x._accumulate(g[tuple(index)])

    return _attach(out, (x,), backward)


# reductions ---------------------------------------------------------------


def tensor_sum(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    out = Tensor(x.value.sum(axis=axis, keepdims=keepdims))
    in_shape = x.value.shape

    def backward(g):
        if axis is None:
            x._accumulate(np.broadcast_to(g, in_shape))
            return
        axes = axis if isinstance(axis, tuple) else (axis,)
        if not keepdims:
            g = np.expand_dims(g, axes)
        x._accumulate(np.broadcast_to(g, in_shape))

    return _attach(out, (x,), backward)


def tensor_mean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    if axis is None:
        count = x.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([x.shape[a] for a in axes]))
    return tensor_sum(x, axis=axis, keepdims=keepdims) * (1.0 / count)


# lookup and convolution ----------------------------------------------------


def embedding_lookup(table, ids: np.ndarray) -> Tensor:
    """Gather rows of `table` ([rows, dim]) at integer `ids`; scatter-add back."""
    table = as_tensor(table)
    ids = np.asarray(ids)
    if ids.min(initial=0) < 0 or ids.max(initial=0) >= table.shape[0]:
        raise ValueError(
            f"embedding ids out of range [0, {table.shape[0]}): "
            f"min={ids.min()}, max={ids.max()}")
    out = Tensor(table.value[ids])

    def backward(g):
        full = np.zeros_like(table.value)
        np.add.at(full, ids.reshape(-1), g.reshape(-1, table.shape[-1]))
        table._accumulate(full)

    return _attach(out, (table,), backward)


def conv1d(x, filters) -> Tensor:
    """Valid 1-D convolution over the time axis.

    x: [batch, length, width]; filters: [n_filters, window, width].
    Each filter takes a full dot product with every length-`window` slice,
    producing [batch, length - window + 1, n_filters].
    """
    x, filters = as_tensor(x), as_tensor(filters)
    if x.ndim != 3 or filters.ndim != 3:
        raise ValueError("conv1d expects x [B, L, D] and filters [K, F, D]")
    length, window = x.shape[1], filters.shape[1]
    if not 1 <= window <= length:
        raise ValueError(f"filter window {window} outside [1, {length}]")
    if filters.shape[2] != x.shape[2]:
        raise ValueError("filter width must match input feature width")
    windows = np.lib.stride_tricks.sliding_window_view(x.value, window, axis=1)
    # windows: [B, L-F+1, D, F]
    out = Tensor(np.einsum("bwdf,kfd->bwk", windows, filters.value))

    def backward(g):
        filters._accumulate(np.einsum("bwk,bwdf->kfd", g, windows))
        dx = np.zeros_like(x.value)
        n_out = g.shape[1]
        for j in range(window):
            dx[:, j:j + n_out, :] += np.einsum("bwk,kd->bwd", g,
                                               filters.value[:, j, :])
        x._accumulate(dx)

    return _attach(out, (x, filters), backward)


# softmax family -------------------------------------------------------------


def softmax(x, axis: int = -1) -> Tensor:
    """Numerically stable softmax (max-subtraction; the shift carries no grad)."""
    x = as_tensor(x)
    shift = np.max(x.value, axis=axis, keepdims=True)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    e = exp(x - shift)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    shift = np.max(x.value, axis=axis, keepdims=True)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    centered = x - shift
    return centered - log(exp(centered).sum(axis=axis, keepdims=True))


def dropout(x, rate: float, rng: np.random.Generator,
            training: bool = True) -> Tensor:
    """Inverted dropout; identity when not training or rate is 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    x = as_tensor(x)
    if not training or rate == 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * Tensor(keep)


def check_finite(x, where: str) -> Tensor:
    """Raise if any entry of `x` is NaN or infinite."""
    x = as_tensor(x)
    if not np.isfinite(x.value).all():
        raise FloatingPointError(f"non-finite values in {where}")
    return x
