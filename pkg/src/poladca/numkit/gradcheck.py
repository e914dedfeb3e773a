from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import NonFiniteError, Tape, Tensor, backward


def grad_check(
    f: Callable[[], Tensor] | Callable[[Tensor], Tensor],
    x: Tensor | Sequence[Tensor],
    h: float = 1e-5,
) -> float:
    """Max relative error between the tape gradient and central differences.

    ``f`` is called as ``f(x)`` when a single tensor is given, otherwise with
    no arguments (closing over the tensors in ``x``).  Error per coordinate is
    ``|analytic - numeric| / max(1, |numeric|)``.
    """
    if not 1e-7 <= h <= 1e-3:
        raise ValueError(f"step h={h} outside [1e-7, 1e-3]")
    single = isinstance(x, Tensor)
    tensors = [x] if single else list(x)
    call = (lambda: f(tensors[0])) if single else f

    saved = [t.requires_grad for t in tensors]
    for t in tensors:
        t.requires_grad = True
        t.grad = None
    try:
        with Tape() as tape:
            loss = call()
        grads = backward(tape, loss, wrt=tensors)

        worst = 0.0
        for t in tensors:
            analytic = grads[t].reshape(-1)
            flat = t.data.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = call().item()
                flat[i] = orig - h
                down = call().item()
                flat[i] = orig
                num = (up - down) / (2.0 * h)
                if not np.isfinite(num):
                    raise NonFiniteError(f"central difference not finite at {i}")
                err = abs(analytic[i] - num) / max(1.0, abs(num))
                worst = max(worst, err)
        return worst
    finally:
        for t, r in zip(tensors, saved):
            t.requires_grad = r
            t.grad = None
