"""Neural LLR estimators."""

from __future__ import annotations

from .config import DatConfig, RdnlaConfig
from .dat import DualAttentionTransformer, TransformerBaseline, sinusoidal_positions
from .preprocessing import preprocess_input
from .rdnla import ResidualDualNonLocalAttentionNet

MODEL_KINDS = ("dat", "rdnla", "transformer")


def build_model(kind: str, n_sym: int, n_sc: int, features: int, bits: int, config=None, seed: int = 0):
    """Construct a model by name: ``"dat"``, ``"rdnla"`` or ``"transformer"``."""
    if kind == "dat":
        return DualAttentionTransformer(n_sym, n_sc, features, bits, config, seed)
    if kind == "transformer":
        return TransformerBaseline(n_sym, n_sc, features, bits, config, seed)
    if kind == "rdnla":
        return ResidualDualNonLocalAttentionNet(n_sym, n_sc, features, bits, config, seed)
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def default_config(kind: str):
    if kind in ("dat", "transformer"):
        return DatConfig(use_dam=kind == "dat")
    if kind == "rdnla":
        return RdnlaConfig()
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


__all__ = [
    "DatConfig",
    "DualAttentionTransformer",
    "MODEL_KINDS",
    "RdnlaConfig",
    "ResidualDualNonLocalAttentionNet",
    "TransformerBaseline",
    "build_model",
    "default_config",
    "preprocess_input",
    "sinusoidal_positions",
]
