"""Dense float64 tensors with reverse-mode automatic differentiation.

Every value in the learnable part of the system flows through these ops.
A Tensor wraps a numpy float64 buffer; ops record a closure that routes the
output gradient back to their inputs. Nodes whose inputs do not require
gradients are not taped, so constant arithmetic stays cheap.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInputError, ShapeError


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None

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

    def detach(self) -> "Tensor":
        """Constant view of this tensor's current value (no tape)."""
        return Tensor(self.data)

    def _accum(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    # operator sugar -----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return neg(self)

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return take(self, key)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data, parents, backward) -> Tensor:
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum gradient over axes that were broadcast in the forward pass."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


# elementwise ------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g, b.data.shape))

    return _node(data, (a, b), backward)


def neg(a) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        if a.requires_grad:
            a._accum(-g)

    return _node(-a.data, (a,), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g * a.data, b.data.shape))

    return _node(data, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data / b.data

    def backward(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g / b.data, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _node(data, (a, b), backward)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.data)

    def backward(g):
        if a.requires_grad:
            a._accum(g * (1.0 - y * y))

    return _node(y, (a,), backward)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    y = 1.0 / (1.0 + np.exp(-a.data))

    def backward(g):
        if a.requires_grad:
            a._accum(g * y * (1.0 - y))

    return _node(y, (a,), backward)


def exp(a) -> Tensor:
    a = as_tensor(a)
    y = np.exp(a.data)

    def backward(g):
        if a.requires_grad:
            a._accum(g * y)

    return _node(y, (a,), backward)


def log(a) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        if a.requires_grad:
            a._accum(g / a.data)

    return _node(np.log(a.data), (a,), backward)


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    y = np.sqrt(a.data)

    def backward(g):
        if a.requires_grad:
            a._accum(g * 0.5 / y)

    return _node(y, (a,), backward)


# reductions -------------------------------------------------------------

def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if not a.requires_grad:
            return
        if axis is None:
            a._accum(np.broadcast_to(g, a.data.shape).copy())
        else:
            g_ = g if keepdims else np.expand_dims(g, axis)
            a._accum(np.broadcast_to(g_, a.data.shape).copy())

    return _node(data, (a,), backward)


def tmean(a, axis=None) -> Tensor:
    a = as_tensor(a)
    count = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis), 1.0 / count)


# linear algebra ----------------------------------------------------------

def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.data.shape, b.data.shape
    if a.ndim == 2 and b.ndim == 2:
        if sa[1] != sb[0]:
            raise ShapeError(f"matmul: inner dimensions disagree for {sa} x {sb}")
        data = a.data @ b.data

        def backward(g):
            if a.requires_grad:
                a._accum(g @ b.data.T)
            if b.requires_grad:
                b._accum(a.data.T @ g)

    elif a.ndim == 1 and b.ndim == 2:
        if sa[0] != sb[0]:
            raise ShapeError(f"matmul: inner dimensions disagree for {sa} x {sb}")
        data = a.data @ b.data

        def backward(g):
            if a.requires_grad:
                a._accum(g @ b.data.T)
            if b.requires_grad:
                b._accum(np.outer(a.data, g))

    elif a.ndim == 2 and b.ndim == 1:
        if sa[1] != sb[0]:
            raise ShapeError(f"matmul: inner dimensions disagree for {sa} x {sb}")
        data = a.data @ b.data

        def backward(g):
            if a.requires_grad:
                a._accum(np.outer(g, b.data))
            if b.requires_grad:
                b._accum(a.data.T @ g)

    else:
        raise ShapeError(f"matmul: unsupported ranks for shapes {sa} x {sb}")

    return _node(data, (a, b), backward)


def transpose(a) -> Tensor:
    a = as_tensor(a)
    if a.ndim != 2:
        raise ShapeError(f"transpose expects a matrix, got shape {a.data.shape}")

    def backward(g):
        if a.requires_grad:
            a._accum(g.T)

    return _node(a.data.T, (a,), backward)


# shape manipulation ------------------------------------------------------

def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    old = a.data.shape

    def backward(g):
        if a.requires_grad:
            a._accum(g.reshape(old))

    return _node(a.data.reshape(shape), (a,), backward)


def concat(tensors, axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    if not ts:
        raise ValueError("concat requires at least one tensor")
    data = np.concatenate([t.data for t in ts], axis=axis)
    sizes = [t.data.shape[axis] for t in ts]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        pieces = np.split(g, splits, axis=axis)
        for t, piece in zip(ts, pieces):
            if t.requires_grad:
                t._accum(piece)

    return _node(data, ts, backward)


def take(a, key) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            np.add.at(full, key, g)
            a._accum(full)

    return _node(a.data[key], (a,), backward)


def stack_rows(tensors) -> Tensor:
    """Stack 1-D tensors of equal length into a matrix, one per row."""
    return concat([reshape(t, (1, -1)) for t in tensors], axis=0)


# normalizers -------------------------------------------------------------

def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    if a.data.size == 0:
        raise ValueError("softmax: empty input")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        if a.requires_grad:
            dot = (g * y).sum(axis=axis, keepdims=True)
            a._accum(y * (g - dot))

    return _node(y, (a,), backward)


def log_softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    if a.data.size == 0:
        raise ValueError("log_softmax: empty input")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    y = shifted - lse
    sm = np.exp(y)

    def backward(g):
        if a.requires_grad:
            a._accum(g - sm * g.sum(axis=axis, keepdims=True))

    return _node(y, (a,), backward)


def dropout(a, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout; exact identity when not training or rate is zero."""
    if not (0.0 <= rate < 1.0):
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return as_tensor(a)
    a = as_tensor(a)
    mask = (rng.random(a.data.shape) >= rate) / (1.0 - rate)
    return mul(a, Tensor(mask))


# vector helpers ----------------------------------------------------------

def dot(a, b) -> Tensor:
    return tsum(mul(a, b))


def cosine_similarity(a, b) -> Tensor:
    """Cosine of the angle between two nonzero vectors; scalar tensor output."""
    a, b = as_tensor(a), as_tensor(b)
    if a.data.shape != b.data.shape:
        raise ShapeError(f"cosine_similarity: shapes {a.data.shape} vs {b.data.shape}")
    if not np.any(a.data) or not np.any(b.data):
        raise DegenerateInputError("cosine_similarity: zero vector has no direction")
    return div(dot(a, b), mul(sqrt(dot(a, a)), sqrt(dot(b, b))))


# backward pass -----------------------------------------------------------

def _toposort(root: Tensor):
    order = []
    seen = set()
    stack = [(root, False)]
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


def backward(loss: Tensor) -> None:
    """Populate .grad for every requires_grad tensor reachable from a scalar loss."""
    if loss.data.size != 1:
        raise ValueError(f"backward expects a scalar loss, got shape {loss.data.shape}")
    if not loss.requires_grad:
        return
    loss.grad = np.ones_like(loss.data)
    for node in reversed(_toposort(loss)):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def grad_check(f, tensors, eps: float = 1e-5) -> float:
    """Max discrepancy between autodiff and central finite differences.

    f must be a deterministic, dropout-free closure returning a scalar Tensor
    built from `tensors`. The error for one coordinate is
    |fd - ad| / max(1e-4, |fd| + |ad|), i.e. relative with an absolute floor
    so exactly-zero gradients do not blow up the ratio.
    """
    tensors = list(tensors)
    for t in tensors:
        t.grad = None
    backward(f())
    analytic = [np.array(t.grad) if t.grad is not None else np.zeros_like(t.data)
                for t in tensors]
    for t in tensors:
        t.grad = None

    worst = 0.0
    for t, ad in zip(tensors, analytic):
        flat = t.data.ravel()
        ad_flat = ad.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = float(f().data)
            flat[i] = orig - eps
            f_minus = float(f().data)
            flat[i] = orig
            fd = (f_plus - f_minus) / (2.0 * eps)
            err = abs(fd - ad_flat[i]) / max(1e-4, abs(fd) + abs(ad_flat[i]))
            worst = max(worst, err)
    return worst
