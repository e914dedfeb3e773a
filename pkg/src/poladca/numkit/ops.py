"""Differentiable primitives.

Elementwise binary ops broadcast only where one operand has size-1 axes
(bias rows, per-node columns, per-head scalars); the gradient is summed back
over the broadcast axes.  ``matmul`` batches over leading axes like numpy.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import (
    NonFiniteError,
    ShapeError,
    Tensor,
    UnknownOpError,
    _check_finite,
    active_tape,
)

LEAKY_SLOPE = 0.2


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _emit(op: str, out: np.ndarray, inputs: tuple[Tensor, ...], vjp) -> Tensor:
    _check_finite(out, op)
    req = any(t.requires_grad for t in inputs)
    res = Tensor._wrap(out, req)
    res.op = op
    if req:
        tape = active_tape()
        if tape is not None:
            tape.record(op, inputs, res, vjp)
    return res


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not conform") from None


# -- elementwise arithmetic -------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("add", a, b)
    return _emit("add", a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("sub", a, b)
    return _emit("sub", a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("mul", a, b)
    ad, bd = a.data, b.data
    return _emit("mul", ad * bd, (a, b),
                 lambda g: (_unbroadcast(g * bd, a.shape), _unbroadcast(g * ad, b.shape)))


def neg(a: Tensor) -> Tensor:
    return _emit("neg", -a.data, (a,), lambda g: (-g,))


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _emit("scale", a.data * c, (a,), lambda g: (g * c,))


# -- linear algebra -----------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs >=2-d operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data
    try:
        out = ad @ bd
    except ValueError:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}") from None

    def vjp(g):
        ga = g @ np.swapaxes(bd, -1, -2)
        gb = np.swapaxes(ad, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _emit("matmul", out, (a, b), vjp)


def swapaxes(a: Tensor, ax1: int, ax2: int) -> Tensor:
    return _emit("swapaxes", np.swapaxes(a.data, ax1, ax2), (a,),
                 lambda g: (np.swapaxes(g, ax1, ax2),))


def transpose(a: Tensor) -> Tensor:
    if a.ndim < 2:
        raise ShapeError(f"transpose needs >=2 dims, got {a.shape}")
    return swapaxes(a, -1, -2)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"cannot reshape {a.shape} to {tuple(shape)}") from None
    src = a.shape
    return _emit("reshape", out, (a,), lambda g: (g.reshape(src),))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = tuple(tensors)
    if not tensors:
        raise ShapeError("concat of nothing")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError(f"concat: shapes {[t.shape for t in tensors]}") from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def vjp(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _emit("concat", out, tensors, vjp)


def take(a: Tensor, axis: int, start: int, stop: int) -> Tensor:
    """Contiguous slice ``start:stop`` along ``axis``."""
    n = a.shape[axis]
    if not 0 <= start < stop <= n:
        raise ShapeError(f"slice {start}:{stop} out of range for axis of size {n}")
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    src = a.shape

    def vjp(g):
        out = np.zeros(src)
        out[idx] = g
        return (out,)

    return _emit("take", a.data[idx].copy(), (a,), vjp)


def gather(a: Tensor, index: np.ndarray) -> Tensor:
    """Row gather over the node axis.

    ``a`` is (n, M) or (B, n, M); ``index`` is (n, K) or (B, n, K) integer.
    Result is (..., n, K, M) with ``out[.., i, k] = a[.., index[.., i, k]]``.
    """
    index = np.asarray(index)
    if a.ndim == 2 and index.ndim == 2:
        sel = (index,)
    elif a.ndim == 3 and index.ndim == 3 and index.shape[0] == a.shape[0]:
        sel = (np.arange(a.shape[0])[:, None, None], index)
    else:
        raise ShapeError(f"gather: tensor {a.shape} with index {index.shape}")
    if index.size and (index.min() < 0 or index.max() >= a.shape[-2]):
        raise ShapeError("gather: index out of range")
    src = a.shape

    def vjp(g):
        out = np.zeros(src)
        np.add.at(out, sel, g)
        return (out,)

    return _emit("gather", a.data[sel], (a,), vjp)


def pick(a: Tensor, index: np.ndarray) -> Tensor:
    """Select one entry per row of the last axis: ``out[..] = a[.., index[..]]``."""
    index = np.asarray(index, dtype=np.int64)
    if index.shape != a.shape[:-1]:
        raise ShapeError(f"pick: index shape {index.shape} vs tensor {a.shape}")
    if index.size and (index.min() < 0 or index.max() >= a.shape[-1]):
        raise ShapeError("pick: index out of range")
    expanded = index[..., None]
    src = a.shape

    def vjp(g):
        out = np.zeros(src)
        np.put_along_axis(out, expanded, g[..., None], axis=-1)
        return (out,)

    return _emit("pick", np.take_along_axis(a.data, expanded, axis=-1)[..., 0], (a,), vjp)


# -- reductions -------------------------------------------------------------

def sum(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    src = a.shape

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, src).copy(),)

    return _emit("sum", np.asarray(a.data.sum(axis=axis, keepdims=keepdims)), (a,), vjp)


def sorted_sum(a: Tensor, axis: int) -> Tensor:
    """Sum along ``axis`` after sorting the terms, so the result ignores term order."""
    src = a.shape

    def vjp(g):
        return (np.broadcast_to(np.expand_dims(g, axis), src).copy(),)

    return _emit("sorted_sum", np.sort(a.data, axis=axis).sum(axis=axis), (a,), vjp)


def mean(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    n = a.size if axis is None else a.shape[axis]
    src = a.shape

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / n, src).copy(),)

    return _emit("mean", np.asarray(a.data.mean(axis=axis, keepdims=keepdims)), (a,), vjp)


def row_mean(a: Tensor) -> Tensor:
    """Mean over the node (second-to-last) axis, keeping it as size 1."""
    return mean(a, axis=-2, keepdims=True)


# -- nonlinearities -----------------------------------------------------------

def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _emit("relu", np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def leaky_relu(a: Tensor, slope: float = LEAKY_SLOPE) -> Tensor:
    if not 0.0 < slope < 1.0:
        raise ValueError(f"leaky-relu slope must lie in (0, 1), got {slope}")
    factor = np.where(a.data > 0, 1.0, slope)
    return _emit("leaky_relu", a.data * factor, (a,), lambda g: (g * factor,))


def sigmoid(a: Tensor) -> Tensor:
    out = np.exp(-np.logaddexp(0.0, -a.data))
    return _emit("sigmoid", out, (a,), lambda g: (g * out * (1.0 - out),))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _emit("tanh", out, (a,), lambda g: (g * (1.0 - out * out),))


def sqrt(a: Tensor) -> Tensor:
    if (a.data < 0).any():
        raise ValueError("sqrt of negative entry")
    out = np.sqrt(a.data)
    pos = out > 0
    # derivative at exactly 0 taken as 0
    inv = np.where(pos, 0.5 / np.where(pos, out, 1.0), 0.0)
    return _emit("sqrt", out, (a,), lambda g: (g * inv,))


def row_softmax(a: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Softmax over the last axis; entries where ``mask`` is False get weight 0."""
    x = a.data
    if mask is not None:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
        if not mask.any(axis=-1).all():
            raise ValueError("masked softmax row with no admissible entry")
        x = np.where(mask, x, -np.inf)
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    out = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return _emit("row_softmax", out, (a,), vjp)


def log_softmax(a: Tensor) -> Tensor:
    x = a.data
    shifted = x - x.max(axis=-1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))

    def vjp(g):
        return (g - np.exp(out) * g.sum(axis=-1, keepdims=True),)

    return _emit("log_softmax", out, (a,), vjp)


# -- dispatch ---------------------------------------------------------------

PRIMITIVES: dict[str, Callable[..., Tensor]] = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "hadamard": mul,
    "neg": neg,
    "scale": scale,
    "matmul": matmul,
    "transpose": transpose,
    "swapaxes": swapaxes,
    "reshape": reshape,
    "concat": lambda *ts, axis=-1: concat(ts, axis=axis),
    "take": take,
    "gather": gather,
    "pick": pick,
    "sum": sum,
    "sorted_sum": sorted_sum,
    "mean": mean,
    "row_mean": row_mean,
    "relu": relu,
    "leaky_relu": leaky_relu,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "sqrt": sqrt,
    "row_softmax": row_softmax,
    "log_softmax": log_softmax,
}


def primitive_forward(op_kind: str, *inputs: Tensor, **attrs) -> Tensor:
    try:
        fn = PRIMITIVES[op_kind]
    except KeyError:
        raise UnknownOpError(op_kind) from None
    for t in inputs:
        if isinstance(t, Tensor) and not np.isfinite(t.data).all():
            raise NonFiniteError(f"non-finite input to {op_kind}")
    return fn(*inputs, **attrs)
