"""Saving and restoring models together with the link they were built for."""

from __future__ import annotations

from dataclasses import asdict

import numpy as np

from ..autodiff.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from ..phy import LinkConfig
from .config import DatConfig, RdnlaConfig

FORMAT = "neurorx-model"


def link_to_dict(cfg: LinkConfig) -> dict:
    d = asdict(cfg)
    d["pilot_symbols"] = list(cfg.pilot_symbols)
    return d


def model_header(model, link: LinkConfig, seed: int = 0) -> dict:
    return {
        "format": FORMAT,
        "kind": model.kind,
        "model_config": model.config.to_dict(),
        "link": link_to_dict(link),
        "seed": seed,
    }


def save_model(path, model, link: LinkConfig, seed: int = 0, extra_header: dict | None = None,
               extra_arrays: dict[str, np.ndarray] | None = None) -> None:
    header = model_header(model, link, seed)
    header.update(extra_header or {})
    arrays = dict(model.state_dict())
    for name, value in (extra_arrays or {}).items():
        if name in arrays:
            raise ValueError(f"extra array {name!r} collides with a parameter name")
        arrays[name] = value
    save_checkpoint(path, header, arrays)


def _config_for(kind: str, raw: dict):
    if kind in ("dat", "transformer"):
        return DatConfig(**raw)
    if kind == "rdnla":
        return RdnlaConfig(**raw)
    raise CheckpointError(f"unknown model kind {kind!r} in checkpoint")


def load_model(path, link: LinkConfig | None = None, kind: str | None = None):
    """Rebuild a model from a checkpoint.

    Args:
        link: if given, the checkpoint must have been trained on a link with
            the same grid dimensions, modulation and pilot layout.
        kind: if given, the checkpoint must hold this model kind.

    Returns:
        ``(model, header, extra_arrays)`` where ``extra_arrays`` holds any
        non-parameter records (for example optimizer moments).

    Raises:
        CheckpointError: on a missing file, wrong kind, incompatible link or
            a parameter shape mismatch.
    """
    from . import build_model

    header, arrays = load_checkpoint(path)
    if header.get("format") != FORMAT:
        raise CheckpointError(f"{path} does not hold a model checkpoint")
    saved_kind = header["kind"]
    if kind is not None and kind != saved_kind:
        raise CheckpointError(f"{path} holds a {saved_kind!r} model, expected {kind!r}")
    saved_link = LinkConfig(**header["link"])
    if link is not None:
        for key in ("n_sym", "n_sc", "n_rx", "bits_per_symbol", "pilot_symbols", "pilot_sequence"):
            if getattr(link, key) != getattr(saved_link, key):
                raise CheckpointError(
                    f"{path}: checkpoint {key}={getattr(saved_link, key)} does not match link {key}={getattr(link, key)}"
                )
    ref = link or saved_link
    model = build_model(saved_kind, ref.n_sym, ref.n_sc, ref.n_features, ref.bits_per_symbol,
                        _config_for(saved_kind, header["model_config"]), seed=int(header.get("seed", 0)))
    own = {name for name, _ in model.named_parameters()}
    params = {k: v for k, v in arrays.items() if k in own}
    extras = {k: v for k, v in arrays.items() if k not in own}
    try:
        model.load_state_dict(params)
    except ValueError as exc:
        raise CheckpointError(f"{path}: {exc}") from exc
    return model, header, extras
