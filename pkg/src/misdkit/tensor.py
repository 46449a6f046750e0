"""Dense float64 tensors with reverse-mode automatic differentiation.

Define-by-run: every operation on tracked tensors records its inputs and a
vector-Jacobian closure; ``backward`` replays the records in reverse creation
order, which is a valid topological order of the graph.  The op set is the
minimum needed for multilayer perceptrons, temperature-scaled softmax
cross-entropy, and gradients with respect to the network input.

Everything is float64.  Radius estimates divide small logit gaps by small
finite-difference slopes, which is not reliable in single precision.
"""

from __future__ import annotations

import itertools
from contextlib import contextmanager

import numpy as np

from .exceptions import DimensionError, GraphError, ParameterError

_node_ids = itertools.count()
_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph recording inside the block (inference / probe passes)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    """A numpy array plus optional gradient and graph bookkeeping.

    ``grad`` is populated by :func:`backward` and always matches ``data`` in
    shape.  Tensors are treated as immutable once created, except for gradient
    accumulation during backward.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp", "_nid")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._vjp = None
        self._nid = next(_node_ids)

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- operator sugar -------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(_as_tensor(other), -1.0))

    def __rsub__(self, other):
        return add(_as_tensor(other), mul(self, -1.0))

    def __truediv__(self, scalar):
        return mul(self, 1.0 / float(scalar))

    def __matmul__(self, other):
        return matmul(self, other)

    def relu(self):
        return relu(self)

    def log(self):
        return log(self)

    def exp(self):
        return exp(self)

    def sum(self, axis=None):
        return tsum(self, axis=axis)

    def mean(self):
        return mean(self)

    def backward(self):
        backward(self)

    def zero_grad(self):
        self.grad = None


def _as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _make(data: np.ndarray, parents, vjp) -> Tensor:
    """Wrap an op result; record the graph edge only while tracking is on."""
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


# -- primitive operations ------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data + b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _make(out, (a, b), vjp)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data * b.data

    def vjp(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return _make(out, (a, b), vjp)


def matmul(a, b) -> Tensor:
    """Matrix product of two 2-d tensors; gradients flow to both inputs."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise DimensionError(
            f"matmul expects 2-d operands, got {a.data.shape} and {b.data.shape}"
        )
    if a.data.shape[1] != b.data.shape[0]:
        raise DimensionError(
            f"matmul inner dimensions disagree: {a.data.shape} x {b.data.shape}"
        )
    out = a.data @ b.data

    def vjp(g):
        return g @ b.data.T, a.data.T @ g

    return _make(out, (a, b), vjp)


def relu(x) -> Tensor:
    """Elementwise max(0, x).  The subgradient at exactly 0 is fixed to 0."""
    x = _as_tensor(x)
    mask = x.data > 0.0
    out = np.where(mask, x.data, 0.0)

    def vjp(g):
        return (g * mask,)

    return _make(out, (x,), vjp)


def log(x) -> Tensor:
    x = _as_tensor(x)
    out = np.log(x.data)

    def vjp(g):
        return (g / x.data,)

    return _make(out, (x,), vjp)


def exp(x) -> Tensor:
    x = _as_tensor(x)
    out = np.exp(x.data)

    def vjp(g):
        return (g * out,)

    return _make(out, (x,), vjp)


def tsum(x, axis=None) -> Tensor:
    x = _as_tensor(x)
    out = x.data.sum(axis=axis)

    def vjp(g):
        if axis is None:
            return (np.full_like(x.data, float(g)),)
        return (np.broadcast_to(np.expand_dims(g, axis), x.data.shape).copy(),)

    return _make(out, (x,), vjp)


def mean(x) -> Tensor:
    x = _as_tensor(x)
    n = x.data.size
    out = x.data.mean()

    def vjp(g):
        return (np.full_like(x.data, float(g) / n),)

    return _make(out, (x,), vjp)


def take_rows(x, indices) -> Tensor:
    """Pick one entry per row of a 2-d tensor: out[i] = x[i, indices[i]]."""
    x = _as_tensor(x)
    idx = np.asarray(indices, dtype=np.int64)
    rows = np.arange(x.data.shape[0])
    out = x.data[rows, idx]

    def vjp(g):
        full = np.zeros_like(x.data)
        full[rows, idx] = g
        return (full,)

    return _make(out, (x,), vjp)


def softmax(z, temperature: float = 1.0) -> Tensor:
    """Numerically stable softmax of logits along the last axis.

    Computes exp((z - max z) / T) normalized; the max subtraction keeps the
    exponentials bounded so downstream logit-gap divisions stay finite.
    Preserves the argmax for every T > 0.
    """
    if temperature <= 0:
        raise ParameterError(f"temperature must be > 0, got {temperature}")
    z = _as_tensor(z)
    s = z.data / temperature
    s = s - s.max(axis=-1, keepdims=True)
    e = np.exp(s)
    p = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        inner = (g * p).sum(axis=-1, keepdims=True)
        return (p * (g - inner) / temperature,)

    return _make(p, (z,), vjp)


def cross_entropy(logits, targets, temperature: float = 1.0) -> Tensor:
    """Softmax cross-entropy at temperature T: -log softmax(z / T)[y].

    ``logits`` may be a single vector with an integer target (scalar loss) or
    an (n, K) batch with n integer targets (length-n loss vector).  Gradients
    flow to the logits and, through the graph, to the network input.
    """
    if temperature <= 0:
        raise ParameterError(f"temperature must be > 0, got {temperature}")
    z = _as_tensor(logits)
    single = z.data.ndim == 1
    zdata = z.data[None, :] if single else z.data
    if zdata.ndim != 2:
        raise DimensionError(f"cross_entropy expects 1-d or 2-d logits, got {z.data.shape}")
    n, k = zdata.shape
    y = np.atleast_1d(np.asarray(targets, dtype=np.int64))
    if y.shape != (n,):
        raise DimensionError(f"expected {n} targets, got shape {y.shape}")
    if (y < 0).any() or (y >= k).any():
        raise ParameterError(f"class index out of range [0, {k})")

    s = zdata / temperature
    m = s.max(axis=1, keepdims=True)
    shifted = s - m
    lse = np.log(np.exp(shifted).sum(axis=1)) + m[:, 0]
    rows = np.arange(n)
    losses = lse - s[rows, y]
    p = np.exp(shifted)
    p /= p.sum(axis=1, keepdims=True)

    def vjp(g):
        gcol = np.atleast_1d(g).reshape(n, 1)
        grad = p.copy()
        grad[rows, y] -= 1.0
        grad *= gcol / temperature
        return (grad[0] if single else grad,)

    return _make(losses[0] if single else losses, (z,), vjp)


# -- backward ------------------------------------------------------------


def backward(root: Tensor) -> None:
    """Reverse-mode sweep from a scalar root.

    Populates ``grad`` on every tensor the root depends on, accumulating into
    existing gradients (callers zero parameter grads between steps).  Nodes
    are visited exactly once, in reverse creation order, so repeated runs over
    the same graph produce bitwise-identical gradients.
    """
    if root.data.size != 1:
        raise GraphError(f"backward requires a scalar root, got shape {root.data.shape}")

    nodes = []
    seen = set()
    stack = [root]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        nodes.append(node)
        stack.extend(node._parents)
    nodes.sort(key=lambda n: -n._nid)

    if root.grad is None:
        root.grad = np.ones_like(root.data)
    else:
        root.grad = root.grad + np.ones_like(root.data)

    for node in nodes:
        if node._vjp is None or node.grad is None:
            continue
        for parent, g in zip(node._parents, node._vjp(node.grad)):
            if g is None or not parent.requires_grad:
                continue
            if parent.grad is None:
                parent.grad = np.zeros_like(parent.data)
            parent.grad = parent.grad + g
