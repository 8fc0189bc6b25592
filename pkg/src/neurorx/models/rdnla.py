"""Residual Dual Non-Local Attention LLR estimator."""

from __future__ import annotations

import numpy as np

from ..autodiff import ops
from ..autodiff.layers import Conv2D, Dropout, Module, PReLU
from ..autodiff.tensor import Tensor, as_tensor
from .config import RdnlaConfig


class ResidualDenseBlock(Module):
    """``Dropout(F + PReLU(conv(PReLU(conv(F)))))``."""

    def __init__(self, channels: int, kernel_size: int, rng: np.random.Generator, dropout: float,
                 dropout_rng: np.random.Generator, init_scale: float = 1.0):
        self.conv1 = Conv2D(channels, channels, kernel_size, rng)
        self.act1 = PReLU(channels)
        self.conv2 = Conv2D(channels, channels, kernel_size, rng)
        self.conv2.kernels.data *= init_scale
        self.act2 = PReLU(channels)
        self.drop = Dropout(dropout, dropout_rng)

    def forward(self, f: Tensor) -> Tensor:
        return self.drop(f + self.act2(self.conv2(self.act1(self.conv1(f)))))


class ParallelResidualBlock(Module):
    """Two arms of two RDBs, each arm skip-connected to the input, summed and fused by one conv."""

    def __init__(self, channels: int, kernel_size: int, rng: np.random.Generator, dropout: float,
                 dropout_rng: np.random.Generator, init_scale: float = 1.0, fuse_scale: float = 1.0):
        self.arms = [
            [ResidualDenseBlock(channels, kernel_size, rng, dropout, dropout_rng, init_scale) for _ in range(2)]
            for _ in range(2)
        ]
        self.fuse = Conv2D(channels, channels, kernel_size, rng)
        self.fuse.kernels.data *= fuse_scale

    def forward(self, f: Tensor) -> Tensor:
        total = None
        for first, second in self.arms:
            arm = second(first(f)) + f
            total = arm if total is None else total + arm
        return self.fuse(total)


class DualNonLocalAttention(Module):
    """Non-local block with a spatial (token x token) and a channel (C' x C') branch.

    Three 1x1 convs embed the input to ``C' = C/2`` channels; each branch is
    restored to ``C`` channels by its own 1x1 conv and both are added to the input.
    """

    def __init__(self, channels: int, rng: np.random.Generator, init_scale: float = 1.0):
        if channels % 2:
            raise ValueError(f"DNLA needs an even channel count, got {channels}")
        inner = channels // 2
        self.theta = Conv2D(channels, inner, 1, rng)
        self.phi = Conv2D(channels, inner, 1, rng)
        self.g = Conv2D(channels, inner, 1, rng)
        self.restore_spatial = Conv2D(inner, channels, 1, rng)
        self.restore_channel = Conv2D(inner, channels, 1, rng)
        self.restore_spatial.kernels.data *= init_scale
        self.restore_channel.kernels.data *= init_scale
        self.last_spatial_attention: np.ndarray | None = None
        self.last_channel_attention: np.ndarray | None = None

    def forward(self, x: Tensor) -> Tensor:
        x = as_tensor(x)
        if x.shape[-1] % 2:
            raise ValueError(f"DNLA needs an even channel count, got {x.shape[-1]}")
        *lead, height, width, _ = x.shape
        tokens = height * width
        theta = self.theta(x).reshape(-1, tokens, self.theta.kernels.shape[-1])
        phi = self.phi(x).reshape(theta.shape)
        g = self.g(x).reshape(theta.shape)

        a_s = ops.softmax(ops.matmul(theta, phi.swapaxes(-1, -2)), axis=-1)
        z_s = ops.matmul(a_s, g)
        a_c = ops.softmax(ops.matmul(theta.swapaxes(-1, -2), phi), axis=-1)
        z_c = ops.matmul(a_c, g.swapaxes(-1, -2))  # (B, C', T)
        self.last_spatial_attention = a_s.data
        self.last_channel_attention = a_c.data

        inner = theta.shape[-1]
        spatial = self.restore_spatial(z_s.reshape(*lead, height, width, inner))
        channel = self.restore_channel(z_c.swapaxes(-1, -2).reshape(*lead, height, width, inner))
        return x + spatial + channel


class ResidualDualNonLocalAttentionNet(Module):
    """Conv+PReLU stem, PRB/DNLA body, global skip from the stem, conv head with ``bits`` filters."""

    kind = "rdnla"

    def __init__(self, n_sym: int, n_sc: int, features: int, bits: int, config: RdnlaConfig | None = None, seed: int = 0):
        self.config = config = config or RdnlaConfig()
        self.dims = (n_sym, n_sc, features, bits)
        rng = np.random.default_rng(seed)
        self.dropout_rng = np.random.default_rng([seed, 1])
        c, k = config.channels, config.kernel_size
        self.stem = Conv2D(features, c, k, rng)
        self.stem_act = PReLU(c)
        self.stages = [
            ParallelResidualBlock(c, k, rng, config.dropout, self.dropout_rng,
                                  config.residual_init_scale, config.fuse_init_scale)
            if s == "prb" else DualNonLocalAttention(c, rng, config.residual_init_scale)
            for s in config.stages
        ]
        self.head = Conv2D(c, bits, k, rng)

    def forward(self, x) -> Tensor:
        x = as_tensor(x)
        n_sym, n_sc, features, _ = self.dims
        if x.shape[-3:] != (n_sym, n_sc, features):
            raise ops.DimensionError(f"input {x.shape} does not match model grid {(n_sym, n_sc, features)}")
        f0 = self.stem_act(self.stem(x))
        f = f0
        for stage in self.stages:
            f = stage(f)
        return self.head(f + f0)

    def attention_maps(self) -> list[np.ndarray]:
        maps = []
        for stage in self.stages:
            if isinstance(stage, DualNonLocalAttention) and stage.last_spatial_attention is not None:
                maps += [stage.last_spatial_attention, stage.last_channel_attention]
        return maps
