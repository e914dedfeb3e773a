"""Float64 tensors with tape-based reverse-mode differentiation."""
from . import ops
from .gradcheck import grad_check
from .ops import primitive_forward
from .tensor import (
    NonFiniteError,
    NumkitError,
    ShapeError,
    Tape,
    TapeError,
    Tensor,
    UnknownOpError,
    active_tape,
    backward,
)

__all__ = [
    "NonFiniteError",
    "NumkitError",
    "ShapeError",
    "Tape",
    "TapeError",
    "Tensor",
    "UnknownOpError",
    "active_tape",
    "backward",
    "grad_check",
    "ops",
    "primitive_forward",
]
