"""Dual Attention Transformer LLR estimator and its plain-encoder baseline."""

from __future__ import annotations

import numpy as np

from ..autodiff import ops
from ..autodiff.layers import Dense, Dropout, LayerNorm, Module, PReLU, glorot_uniform, parameter
from ..autodiff.tensor import Tensor, as_tensor
from .config import DatConfig


class MultiHeadSelfAttention(Module):
    """Joint QKV projection, per-head scaled dot-product attention, output projection."""

    def __init__(self, width: int, heads: int, rng: np.random.Generator):
        if width % heads:
            raise ValueError(f"width {width} not divisible by {heads} heads")
        self.heads = heads
        self.qkv = parameter(glorot_uniform(rng, width, 3 * width, (width, 3 * width)))
        self.out = parameter(glorot_uniform(rng, width, width, (width, width)))
        self.last_attention: np.ndarray | None = None

    def forward(self, z: Tensor) -> Tensor:
        *lead, tokens, width = z.shape
        dk = width // self.heads
        qkv = ops.dense(z, self.qkv).reshape(-1, tokens, 3, self.heads, dk)
        qkv = qkv.transpose(2, 0, 3, 1, 4)  # (3, B, h, T, dk)
        q, k, v = qkv[0], qkv[1], qkv[2]
        scores = ops.matmul(q, k.swapaxes(-1, -2)) * (1.0 / np.sqrt(dk))
        attn = ops.softmax(scores, axis=-1)
        self.last_attention = attn.data
        heads = ops.matmul(attn, v).transpose(0, 2, 1, 3).reshape(*lead, tokens, width)
        return ops.dense(heads, self.out)


class DualAttention(Module):
    """Channel-wise and token-wise attention over a token matrix.

    A width-D dense layer with PReLU precedes both branches. The channel
    branch scores ``U^T W_c + b_c`` (D x D), the spatial branch scores
    ``U W_s + b_s`` (T x T); both are row-softmaxed and applied to the
    features, and the sum is added back to the input before layer norm.
    """

    def __init__(self, width: int, tokens: int, rng: np.random.Generator):
        self.pre = Dense(width, width, rng)
        self.pre_act = PReLU(width)
        self.w_c = parameter(glorot_uniform(rng, tokens, width, (tokens, width)))
        self.b_c = parameter(np.zeros(width))
        self.w_s = parameter(glorot_uniform(rng, width, tokens, (width, tokens)))
        self.b_s = parameter(np.zeros(tokens))
        self.norm = LayerNorm(width)
        self.last_channel_attention: np.ndarray | None = None
        self.last_spatial_attention: np.ndarray | None = None

    def forward(self, u: Tensor) -> Tensor:
        ud = self.pre_act(self.pre(u))
        udt = ud.swapaxes(-1, -2)
        a_c = ops.softmax(ops.matmul(udt, self.w_c) + self.b_c, axis=-1)
        channel = ops.matmul(a_c, udt).swapaxes(-1, -2)
        a_s = ops.softmax(ops.matmul(ud, self.w_s) + self.b_s, axis=-1)
        spatial = ops.matmul(a_s, ud)
        self.last_channel_attention = a_c.data
        self.last_spatial_attention = a_s.data
        return self.norm(u + channel + spatial)


class DualAttentionEncoderBlock(Module):
    """MHSA + residual LN, optional dual attention, then a residual PReLU feed-forward with LN."""

    def __init__(self, width: int, heads: int, ffn_hidden: int, tokens: int, rng: np.random.Generator,
                 dropout: float = 0.0, use_dam: bool = True, dropout_rng: np.random.Generator | None = None):
        self.mhsa = MultiHeadSelfAttention(width, heads, rng)
        self.norm1 = LayerNorm(width)
        self.dam = DualAttention(width, tokens, rng) if use_dam else None
        self.ffn1 = Dense(width, ffn_hidden, rng)
        self.act = PReLU(ffn_hidden)
        self.ffn2 = Dense(ffn_hidden, width, rng)
        self.norm2 = LayerNorm(width)
        self.drop = Dropout(dropout, dropout_rng or rng)

    def forward(self, z: Tensor) -> Tensor:
        u = self.norm1(z + self.drop(self.mhsa(z)))
        v = self.dam(u) if self.dam is not None else u
        h = self.ffn2(self.act(self.ffn1(v)))
        return self.norm2(v + self.drop(h))


def sinusoidal_positions(n_sym: int, n_sc: int, width: int) -> np.ndarray:
    """Fixed 2-D encoding ``(n_sym * n_sc, width)``: half the features encode the
    subcarrier index, half the symbol index, each as sin/cos pairs at
    geometrically spaced frequencies between one half-cycle over the axis
    and a period of about three positions."""
    half = width // 2
    out = np.zeros((n_sym, n_sc, width))
    for offset, (size, axis_len) in enumerate(((half, n_sc), (width - half, n_sym))):
        pairs = size // 2
        if pairs == 0:
            continue
        lo, hi = np.pi / axis_len, 2.0
        freqs = lo * (hi / lo) ** (np.arange(pairs) / max(pairs - 1, 1))
        pos = np.arange(axis_len)[:, None] * freqs
        enc = np.concatenate([np.sin(pos), np.cos(pos)], axis=-1)
        start = 0 if offset == 0 else half
        if offset == 0:
            out[:, :, start:start + 2 * pairs] = enc[None, :, :]
        else:
            out[:, :, start:start + 2 * pairs] = enc[:, None, :]
    return out.reshape(n_sym * n_sc, width)


class DualAttentionTransformer(Module):
    """Token embedding -> encoder blocks -> per-token dense head of ``bits`` logits.

    Input ``(B, n_sym, n_sc, features)``; output ``(B, n_sym, n_sc, bits)``
    of LLRs ``log P(b=1)/P(b=0)``.
    """

    kind = "dat"

    def __init__(self, n_sym: int, n_sc: int, features: int, bits: int, config: DatConfig | None = None, seed: int = 0):
        self.config = config = config or DatConfig()
        self.dims = (n_sym, n_sc, features, bits)
        rng = np.random.default_rng(seed)
        self.dropout_rng = np.random.default_rng([seed, 1])
        tokens = n_sym * n_sc
        self.embed = Dense(features, config.width, rng)
        if config.positional == "learned":
            self.positions = parameter(rng.normal(0.0, 0.02, size=(tokens, config.width)))
        elif config.positional == "sinusoidal":
            self.positions = Tensor(sinusoidal_positions(n_sym, n_sc, config.width))
        else:
            self.positions = None
        self.blocks = [
            DualAttentionEncoderBlock(config.width, config.heads, config.ffn_hidden, tokens, rng,
                                      config.dropout, config.use_dam, self.dropout_rng)
            for _ in range(config.blocks)
        ]
        self.head = Dense(config.width, bits, rng)

    def forward(self, x) -> Tensor:
        x = as_tensor(x)
        n_sym, n_sc, features, bits = self.dims
        if x.shape[-3:] != (n_sym, n_sc, features):
            raise ops.DimensionError(f"input {x.shape} does not match model grid {(n_sym, n_sc, features)}")
        lead = x.shape[:-3]
        z = self.embed(x.reshape(-1, n_sym * n_sc, features))
        if self.positions is not None:
            z = z + self.positions
        for block in self.blocks:
            z = block(z)
        return self.head(z).reshape(*lead, n_sym, n_sc, bits)

    def attention_maps(self) -> list[np.ndarray]:
        maps = []
        for block in self.blocks:
            maps.append(block.mhsa.last_attention)
            if block.dam is not None:
                maps += [block.dam.last_channel_attention, block.dam.last_spatial_attention]
        return [m for m in maps if m is not None]


class TransformerBaseline(DualAttentionTransformer):
    """Same network with the dual attention removed from every block."""

    kind = "transformer"

    def __init__(self, n_sym: int, n_sc: int, features: int, bits: int, config: DatConfig | None = None, seed: int = 0):
        config = config or DatConfig()
        if config.use_dam:
            config = DatConfig(**{**config.to_dict(), "use_dam": False})
        super().__init__(n_sym, n_sc, features, bits, config, seed)
