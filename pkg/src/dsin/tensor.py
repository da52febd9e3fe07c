"""Dense float64 tensors with define-by-run reverse-mode autodiff.

Every op returns a new :class:`Tensor` that remembers its inputs and a closure
mapping the output gradient to input gradients. :func:`backward` walks the
recorded graph in reverse topological order. Storage is a plain row-major
``numpy`` array; there are no views shared between tensors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class NumericError(ArithmeticError):
    """NaN (or otherwise unusable) values reached an op."""


class ContractError(RuntimeError):
    """A documented precondition was violated by the caller."""


class GradCheckError(RuntimeError):
    """The function handed to the gradient checker is not usable."""


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op", "name")
    __array_priority__ = 100.0

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward = None
        self.op = "leaf"
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, op={self.op}{label})"

    def backward(self) -> None:
        backward(self)

    # operator sugar
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

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims: bool = False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    def swapaxes(self, a: int, b: int):
        axes = list(range(self.ndim))
        axes[a], axes[b] = axes[b], axes[a]
        return transpose(self, tuple(axes))

    def sigmoid(self):
        return sigmoid(self)

    def tanh(self):
        return tanh(self)

    def relu(self):
        return relu(self)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data: np.ndarray, parents: tuple, backward_fn, op: str) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.name = None
    out.op = op
    out.requires_grad = any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = parents
        out._backward = backward_fn
    else:
        out._parents = ()
        out._backward = None
    return out


# ---------------------------------------------------------------------------
# graph traversal
# ---------------------------------------------------------------------------


@dataclass
class Graph:
    """Topologically ordered records of every grad-carrying node under a root.

    Inputs always precede their consumers in ``nodes``.
    """

    nodes: list = field(default_factory=list)

    @classmethod
    def from_root(cls, root: Tensor) -> "Graph":
        order: list = []
        seen: set = set()
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
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        return cls(order)


def backward(loss: Tensor) -> Graph:
    """Populate ``.grad`` on every grad-carrying tensor reachable from ``loss``.

    Gradients add into any existing ``.grad`` so leaves accumulate across
    calls until :meth:`Tensor.zero_grad` is used.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    graph = Graph.from_root(loss)
    pending = {id(loss): np.ones_like(loss.data)}
    for node in reversed(graph.nodes):
        g = pending.pop(id(node), None)
        if g is None:
            continue
        node.grad = g if node.grad is None else node.grad + g
        if node._backward is None:
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            pending[key] = pending[key] + pg if key in pending else pg
    return graph


# ---------------------------------------------------------------------------
# arithmetic
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _node(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)), "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _node(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)), "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _node(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
                 "mul")


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data

    def back(g):
        return (_unbroadcast(g / b.data, a.shape),
                _unbroadcast(-g * out / b.data, b.shape))

    return _node(out, (a, b), back, "div")


def matmul(a, b) -> Tensor:
    """Matrix product over the last two axes; leading axes broadcast."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul shapes {a.shape} and {b.shape} do not align")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as exc:
        raise DimensionError(f"matmul shapes {a.shape} and {b.shape} do not broadcast") from exc

    def back(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        return _unbroadcast(ga, a.shape), _matmul_grad_rhs(a.data, g, b.shape)

    return _node(out, (a, b), back, "matmul")


def _matmul_grad_rhs(a: np.ndarray, g: np.ndarray, bshape: tuple) -> np.ndarray:
    extra = a.ndim - len(bshape)
    if extra > 0 and a.shape[extra:-2] == bshape[:-2]:
        # fold the axes b was broadcast over into the row axis: one product, no reduction
        nb = len(bshape) - 2
        perm = list(range(extra, extra + nb)) + list(range(extra)) + [a.ndim - 2, a.ndim - 1]
        a2 = a.transpose(perm).reshape(bshape[:-2] + (-1, a.shape[-1]))
        g2 = g.transpose(perm).reshape(bshape[:-2] + (-1, g.shape[-1]))
        return np.matmul(np.swapaxes(a2, -1, -2), g2)
    return _unbroadcast(np.matmul(np.swapaxes(a, -1, -2), g), bshape)


def tsum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    shape = x.shape

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _node(np.asarray(x.data.sum(axis=axis, keepdims=keepdims)), (x,), back, "sum")


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = x.data.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([x.shape[a] for a in axes]))
    return tsum(x, axis, keepdims) * (1.0 / count)


def reshape(x: Tensor, shape) -> Tensor:
    old = x.shape
    return _node(x.data.reshape(shape), (x,), lambda g: (g.reshape(old),), "reshape")


def transpose(x: Tensor, axes=None) -> Tensor:
    axes = tuple(reversed(range(x.ndim))) if axes is None else tuple(a % x.ndim for a in axes)
    inverse = tuple(np.argsort(axes))
    return _node(np.ascontiguousarray(np.transpose(x.data, axes)), (x,),
                 lambda g: (np.transpose(g, inverse),), "transpose")


def _is_basic(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return all(p is Ellipsis or p is None or isinstance(p, (int, np.integer, slice)) for p in parts)


def getitem(x: Tensor, index) -> Tensor:
    shape = x.shape
    basic = _is_basic(index)

    def back(g):
        full = np.zeros(shape)
        if basic:
            full[index] = g
        else:
            np.add.at(full, index, g)
        return (full,)

    return _node(np.array(x.data[index]), (x,), back, "getitem")


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise DimensionError(f"cannot concat shapes {[t.shape for t in tensors]}") from exc
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def back(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _node(out, tuple(tensors), back, "concat")


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = np.stack([t.data for t in tensors], axis=axis)

    def back(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return _node(out, tuple(tensors), back, "stack")


def where(cond, a, b) -> Tensor:
    """Select ``a`` where ``cond`` holds, else ``b``; exact, no arithmetic mixing."""
    cond = np.asarray(cond, dtype=bool)
    a, b = as_tensor(a), as_tensor(b)
    out = np.where(cond, a.data, b.data)

    def back(g):
        return (_unbroadcast(np.where(cond, g, 0.0), a.shape),
                _unbroadcast(np.where(cond, 0.0, g), b.shape))

    return _node(out, (a, b), back, "where")


# ---------------------------------------------------------------------------
# pointwise nonlinearities
# ---------------------------------------------------------------------------


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(x: Tensor) -> Tensor:
    out = _stable_sigmoid(x.data)
    return _node(out, (x,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)
    return _node(out, (x,), lambda g: (g * (1.0 - out * out),), "tanh")


def relu(x: Tensor) -> Tensor:
    positive = x.data > 0
    return _node(np.where(positive, x.data, 0.0), (x,),
                 lambda g: (np.where(positive, g, 0.0),), "relu")


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)
    return _node(out, (x,), lambda g: (g * out,), "exp")


def log(x: Tensor) -> Tensor:
    return _node(np.log(x.data), (x,), lambda g: (g / x.data,), "log")


_ELEMENTWISE = {"sigmoid": sigmoid, "tanh": tanh, "relu": relu}


def elementwise(x: Tensor, kind: str) -> Tensor:
    try:
        fn = _ELEMENTWISE[kind]
    except KeyError:
        raise ValueError(f"unknown elementwise kind {kind!r}; expected one of {sorted(_ELEMENTWISE)}")
    return fn(x)


# ---------------------------------------------------------------------------
# fused ops
# ---------------------------------------------------------------------------


def softmax(x: Tensor, axis: int = -1, mask=None) -> Tensor:
    """Max-subtracted softmax along ``axis``.

    With ``mask`` (broadcastable bool array), masked entries get exactly zero
    weight. Slices with no unmasked entry come out as all zeros.
    """
    if np.isnan(x.data).any():
        raise NumericError("softmax received NaN input")
    z = x.data
    if mask is not None:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), z.shape)
        z = np.where(mask, z, -np.inf)
    peak = np.max(z, axis=axis, keepdims=True)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    e = np.exp(z - peak)
    total = e.sum(axis=axis, keepdims=True)
    out = e / np.where(total > 0, total, 1.0)

    def back(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - inner),)

    return _node(out, (x,), back, "softmax")


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-6) -> Tensor:
    """Normalize over the last axis, then scale by ``gamma`` and shift by ``beta``."""
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise DimensionError(f"layer_norm affine shapes {gamma.shape}, {beta.shape} vs width {d}")
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = xhat * gamma.data + beta.data

    def back(g):
        gx = g * gamma.data
        gx = inv * (gx - gx.mean(axis=-1, keepdims=True)
                    - xhat * (gx * xhat).mean(axis=-1, keepdims=True))
        lead = tuple(range(g.ndim - 1))
        return gx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return _node(out, (x, gamma, beta), back, "layer_norm")


def embedding(table: Tensor, ids, padding_idx: int | None = 0) -> Tensor:
    """Row lookup ``table[ids]``; the padding row reads as zeros and gets no gradient."""
    ids = np.asarray(ids, dtype=np.int64)
    rows = table.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= rows):
        raise IndexError(f"embedding id out of range [0, {rows}): min={ids.min()}, max={ids.max()}")
    out = table.data[ids]
    if padding_idx is not None:
        out[ids == padding_idx] = 0.0

    def back(g):
        full = np.zeros(table.shape)
        np.add.at(full, ids, g)
        if padding_idx is not None:
            full[padding_idx] = 0.0
        return (full,)

    return _node(out, (table,), back, "embedding")


def bce_with_logits(logits: Tensor, labels) -> Tensor:
    """Mean binary negative log-likelihood computed directly from logits."""
    y = np.asarray(labels, dtype=np.float64)
    z = logits.data
    if np.isnan(z).any():
        raise NumericError("loss received NaN logits")
    if y.shape != z.shape:
        raise DimensionError(f"logits {z.shape} vs labels {y.shape}")
    n = z.size
    value = (np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))).sum() / n
    return _node(np.asarray(value), (logits,),
                 lambda g: (g * (_stable_sigmoid(z) - y) / n,), "bce_with_logits")


# ---------------------------------------------------------------------------
# finite-difference checking
# ---------------------------------------------------------------------------


@dataclass
class GradCheckReport:
    max_rel_err: float
    passed: bool
    worst: str = ""
    checked: int = 0


def finite_diff_check(f: Callable[..., Tensor], inputs: Sequence[Tensor], h: float = 1e-5,
                      tol: float = 1e-4, max_coords: int | None = None,
                      rng: np.random.Generator | None = None,
                      names: Sequence[str] | None = None) -> GradCheckReport:
    """Compare autodiff gradients of scalar ``f(*inputs)`` against central differences.

    The error for each coordinate is ``|a - n| / max(1, |a|, |n|)``; the report
    carries the maximum. ``max_coords`` samples that many coordinates per input
    instead of sweeping all of them.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    for t in inputs:
        t.grad = None
    loss = f(*inputs)
    if loss.data.size != 1:
        raise GradCheckError(f"checked function must be scalar, got shape {loss.shape}")
    base = float(loss.data.reshape(-1)[0])
    again = float(f(*inputs).data.reshape(-1)[0])
    if base != again:
        raise GradCheckError(f"function is not deterministic: {base!r} != {again!r}")
    backward(loss)
    rng = rng or np.random.default_rng(0)
    names = list(names) if names is not None else [t.name or f"input{i}" for i, t in enumerate(inputs)]

    worst, worst_err, checked = "", 0.0, 0
    for label, t in zip(names, inputs):
        analytic = np.zeros(t.shape) if t.grad is None else t.grad
        flat = t.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        for j in coords:
            saved = flat[j]
            flat[j] = saved + h
            up = float(f(*inputs).data.reshape(-1)[0])
            flat[j] = saved - h
            down = float(f(*inputs).data.reshape(-1)[0])
            flat[j] = saved
            numeric = (up - down) / (2.0 * h)
            a = float(analytic.reshape(-1)[j])
            err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            checked += 1
            if err > worst_err or not worst:
                worst_err = err
                coord = ",".join(str(int(c)) for c in np.unravel_index(j, t.shape)) if t.shape else ""
                worst = f"{label}[{coord}]"
    return GradCheckReport(max_rel_err=worst_err, passed=worst_err < tol, worst=worst, checked=checked)
