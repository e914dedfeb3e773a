"""Dense float64 tensors and an explicit reverse-mode tape.

A ``Tape`` is activated as a context manager.  While active, every primitive
whose inputs include a tensor with ``requires_grad`` appends a record holding
its inputs, its output and a vector-Jacobian closure.  ``backward`` walks the
records in reverse order, so accumulation order is fixed and runs are
bit-reproducible.  Outside of any tape nothing is recorded (inference mode).
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np


class NumkitError(Exception):
    pass


class ShapeError(NumkitError, ValueError):
    pass


class NonFiniteError(NumkitError, FloatingPointError):
    pass


class UnknownOpError(NumkitError, KeyError):
    pass


class TapeError(NumkitError, RuntimeError):
    pass


def _check_finite(arr: np.ndarray, where: str) -> None:
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"non-finite value produced by {where}")


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name", "op", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.array(data, dtype=np.float64)
        _check_finite(arr, name or "Tensor()")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.name = name
        self.op: str | None = None  # producing primitive; None for leaves

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool) -> "Tensor":
        # internal constructor: no copy; callers guarantee finiteness
        t = cls.__new__(cls)
        t.data = arr
        t.requires_grad = requires_grad
        t.grad = None
        t.name = None
        t.op = None
        return t

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.data, False)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    # operator sugar; implementations live in ops.py
    def __add__(self, other):
        from . import ops
        return ops.add(self, _as_tensor(other))

    def __radd__(self, other):
        from . import ops
        return ops.add(_as_tensor(other), self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, _as_tensor(other))

    def __rsub__(self, other):
        from . import ops
        return ops.sub(_as_tensor(other), self)

    def __mul__(self, other):
        from . import ops
        if isinstance(other, (int, float)):
            return ops.scale(self, float(other))
        return ops.mul(self, _as_tensor(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        from . import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, _as_tensor(other))

    @property
    def T(self) -> "Tensor":
        from . import ops
        return ops.transpose(self)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


@dataclass
class Record:
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    vjp: Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Tape:
    """Ordered log of primitive applications."""

    def __init__(self):
        self.records: list[Record] = []
        self._produced: set[int] = set()

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        stack = _stack()
        if not stack or stack[-1] is not self:
            raise TapeError("tape stack corrupted")
        stack.pop()

    def __len__(self) -> int:
        return len(self.records)

    def record(self, op: str, inputs: tuple[Tensor, ...], output: Tensor, vjp) -> None:
        self.records.append(Record(op, inputs, output, vjp))
        self._produced.add(id(output))

    def produced(self, t: Tensor) -> bool:
        return id(t) in self._produced


_local = threading.local()


def _stack() -> list[Tape]:
    s = getattr(_local, "stack", None)
    if s is None:
        s = _local.stack = []
    return s


def active_tape() -> Tape | None:
    s = _stack()
    return s[-1] if s else None


def backward(
    tape: Tape, loss: Tensor, wrt: Iterable[Tensor] | None = None
) -> dict[Tensor, np.ndarray]:
    """Propagate d(loss)/d(.) through ``tape``.

    Gradients are accumulated into ``.grad`` of every reachable leaf that
    requires grad.  The returned map holds those leaf gradients; tensors in
    ``wrt`` that the loss does not depend on map to zeros.
    """
    if loss.size != 1:
        raise ShapeError(f"loss must be scalar, got shape {loss.shape}")
    if not tape.produced(loss) and (loss.op is not None or not loss.requires_grad):
        raise TapeError("loss was not computed on this tape")

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    seen: dict[int, Tensor] = {id(loss): loss}
    for rec in reversed(tape.records):
        g = grads.pop(id(rec.output), None)
        if g is None:
            continue
        in_grads = rec.vjp(g)
        for inp, gi in zip(rec.inputs, in_grads):
            if gi is None or not inp.requires_grad:
                continue
            key = id(inp)
            seen[key] = inp
            if key in grads:
                grads[key] = grads[key] + gi
            else:
                grads[key] = gi

    result: dict[Tensor, np.ndarray] = {}
    for key, g in grads.items():
        t = seen[key]
        if tape.produced(t):
            continue
        _check_finite(g, "backward")
        t.grad = g.copy() if t.grad is None else t.grad + g
        result[t] = g
    if wrt is not None:
        for t in wrt:
            if t not in result:
                result[t] = np.zeros_like(t.data)
                if t.grad is None:
                    t.grad = np.zeros_like(t.data)
    return result
