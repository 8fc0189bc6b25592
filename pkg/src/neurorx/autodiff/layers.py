"""Parameterised building blocks on top of :mod:`neurorx.autodiff.ops`."""

from __future__ import annotations

from collections.abc import Iterator

import numpy as np

from . import ops
from .tensor import Tensor, get_default_dtype


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def he_uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


def parameter(values) -> Tensor:
    return Tensor(np.asarray(values, dtype=get_default_dtype()), requires_grad=True)


class Module:
    """Container that discovers parameters and sub-modules from its attributes.

    Attribute order defines parameter order, so two identically constructed
    modules always enumerate parameters identically.
    """

    training: bool = True

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, value in vars(self).items():
            full = f"{prefix}{name}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(full + ".")
            elif isinstance(value, (list, tuple)):
                yield from _named_in_sequence(value, full)

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def modules(self) -> Iterator["Module"]:
        yield self
        for value in vars(self).values():
            if isinstance(value, Module):
                yield from value.modules()
            elif isinstance(value, (list, tuple)):
                for item in _flatten_modules(value):
                    yield from item.modules()

    def train(self, mode: bool = True) -> "Module":
        for m in self.modules():
            m.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise ValueError(f"state mismatch: missing={missing} unexpected={unexpected}")
        for name, p in own.items():
            value = np.asarray(state[name])
            if value.shape != p.shape:
                raise ValueError(f"shape mismatch for {name}: checkpoint {value.shape}, model {p.shape}")
            p.data = value.astype(p.dtype, copy=True)

    def astype(self, dtype) -> "Module":
        for p in self.parameters():
            p.data = p.data.astype(dtype)
            p.grad = None
        return self

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError


def _named_in_sequence(seq, prefix: str):
    for i, item in enumerate(seq):
        if isinstance(item, Module):
            yield from item.named_parameters(f"{prefix}.{i}.")
        elif isinstance(item, (list, tuple)):
            yield from _named_in_sequence(item, f"{prefix}.{i}")


def _flatten_modules(seq):
    for item in seq:
        if isinstance(item, Module):
            yield item
        elif isinstance(item, (list, tuple)):
            yield from _flatten_modules(item)


class Dense(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, bias: bool = True):
        self.weight = parameter(glorot_uniform(rng, in_features, out_features, (in_features, out_features)))
        self.bias = parameter(np.zeros(out_features)) if bias else None

    def forward(self, x):
        return ops.dense(x, self.weight, self.bias)


class Conv2D(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, rng: np.random.Generator):
        shape = (kernel_size, kernel_size, in_channels, out_channels)
        self.kernels = parameter(he_uniform(rng, kernel_size * kernel_size * in_channels, shape))
        self.bias = parameter(np.zeros(out_channels))

    def forward(self, x):
        return ops.conv2d(x, self.kernels, self.bias)


class LayerNorm(Module):
    def __init__(self, features: int, eps: float = 1e-5):
        self.gain = parameter(np.ones(features))
        self.shift = parameter(np.zeros(features))
        self.eps = eps

    def forward(self, x):
        return ops.layer_norm(x, self.gain, self.shift, self.eps)


class PReLU(Module):
    def __init__(self, channels: int = 1, init: float = 0.25):
        self.alpha = parameter(np.full(channels, init))

    def forward(self, x):
        return ops.prelu(x, self.alpha)


class Dropout(Module):
    def __init__(self, rate: float, rng: np.random.Generator):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate
        self.rng = rng

    def forward(self, x):
        return ops.dropout(x, self.rate, self.training, self.rng)
