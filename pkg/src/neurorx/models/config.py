from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class DatConfig:
    """Dual Attention Transformer hyperparameters.

    ``positional`` selects what is added to the token embedding:
    ``"none"``, ``"sinusoidal"`` (fixed 2-D encoding of symbol and
    subcarrier index) or ``"learned"`` (one free vector per token).
    ``use_dam=False`` gives the plain transformer-encoder baseline.
    """

    width: int = 32
    heads: int = 2
    blocks: int = 1
    ffn_hidden: int = 128
    dropout: float = 0.0
    positional: str = "sinusoidal"
    use_dam: bool = True

    def __post_init__(self):
        if self.width < 1 or self.heads < 1 or self.width % self.heads:
            raise ValueError(f"width {self.width} must be a positive multiple of heads {self.heads}")
        if self.blocks < 1 or self.ffn_hidden < 1:
            raise ValueError("blocks and ffn_hidden must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.positional not in ("none", "sinusoidal", "learned"):
            raise ValueError(f"unknown positional encoding {self.positional!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RdnlaConfig:
    """Residual Dual Non-Local Attention network hyperparameters.

    ``stages`` lists the body blocks applied after the stem, each ``"prb"``
    or ``"dnla"``. ``residual_init_scale`` multiplies the He-uniform draw of
    every conv whose output is added onto a skip path (second RDB conv and
    both DNLA restore convs) and ``fuse_init_scale`` that of each PRB fuse
    conv, whose input holds four skip copies of the block input. Setting
    both to 1.0 gives plain He-uniform everywhere.
    """

    channels: int = 16
    stages: tuple[str, ...] = field(default=("prb", "dnla", "prb"))
    dropout: float = 0.1
    kernel_size: int = 3
    residual_init_scale: float = 0.1
    fuse_init_scale: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if self.channels < 2 or self.channels % 2:
            raise ValueError(f"channels must be even and >= 2, got {self.channels}")
        if any(s not in ("prb", "dnla") for s in self.stages):
            raise ValueError(f"stages must be 'prb' or 'dnla', got {self.stages}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd")
        if self.residual_init_scale < 0 or self.fuse_init_scale < 0:
            raise ValueError("init scales must be non-negative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stages"] = list(self.stages)
        return d
