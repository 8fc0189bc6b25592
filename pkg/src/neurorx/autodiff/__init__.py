"""Minimal reverse-mode automatic differentiation on numpy arrays."""

from . import ops
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .gradcheck import check_gradients, numerical_grad, relative_error
from .layers import Conv2D, Dense, Dropout, LayerNorm, Module, PReLU
from .ops import DimensionError
from .optim import Adam, AdamState, adam_step
from .tensor import Tensor, get_default_dtype, no_grad, precision, set_default_dtype

__all__ = [
    "Adam",
    "AdamState",
    "CheckpointError",
    "Conv2D",
    "Dense",
    "DimensionError",
    "Dropout",
    "LayerNorm",
    "Module",
    "PReLU",
    "Tensor",
    "adam_step",
    "check_gradients",
    "get_default_dtype",
    "load_checkpoint",
    "no_grad",
    "numerical_grad",
    "ops",
    "precision",
    "relative_error",
    "save_checkpoint",
    "set_default_dtype",
]
