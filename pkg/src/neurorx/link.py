"""End-to-end frame generation: bits -> LDPC -> QAM -> grid -> channel -> noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ldpc
from .phy import (
    ChannelRealization,
    LinkConfig,
    apply_channel,
    build_tx_grid,
    channel_model,
    ebn0_db_to_n0,
    map_bits_to_qam,
    pilot_values,
)


@dataclass
class FrameBatch:
    """One batch of simulated frames.

    ``bits`` holds the coded bits (or raw data bits for an uncoded link) in
    transmission order; ``bit_grid`` places them on ``(n_sym, n_sc, bits)``
    with zeros on pilot REs.
    """

    msg: np.ndarray
    bits: np.ndarray
    bit_grid: np.ndarray
    x: np.ndarray
    h: np.ndarray
    y: np.ndarray
    n0: np.ndarray
    ebn0_db: np.ndarray

    def __len__(self) -> int:
        return len(self.y)


def link_code(cfg: LinkConfig) -> ldpc.LdpcCode:
    """The frame-matched LDPC code: one codeword fills the data REs of one frame."""
    return ldpc.cached_code(cfg.n_coded_bits, cfg.code_rate, cfg.code_seed)


def bits_to_grid(bits: np.ndarray, cfg: LinkConfig) -> np.ndarray:
    out = np.zeros((len(bits), cfg.n_sym, cfg.n_sc, cfg.bits_per_symbol), dtype=np.uint8)
    out[:, cfg.data_mask] = bits.reshape(len(bits), cfg.n_data_re, cfg.bits_per_symbol)
    return out


def grid_to_codeword_llrs(llr_grid: np.ndarray, cfg: LinkConfig) -> np.ndarray:
    """Collect data-RE LLRs ``(B, n_sym, n_sc, bits)`` into transmission order ``(B, n)``."""
    return llr_grid[:, cfg.data_mask].reshape(len(llr_grid), -1)


def generate_frames(
    cfg: LinkConfig,
    batch: int,
    ebn0_db,
    rng: np.random.Generator,
    code: ldpc.LdpcCode | None = None,
    coded: bool = True,
) -> FrameBatch:
    """Simulate ``batch`` frames at the given Eb/N0 (scalar or one value per frame)."""
    ebn0 = np.broadcast_to(np.asarray(ebn0_db, dtype=float), (batch,)).copy()
    n0 = np.asarray(ebn0_db_to_n0(ebn0, cfg, coded=coded), dtype=float)
    if coded:
        code = code if code is not None else link_code(cfg)
        if code.n != cfg.n_coded_bits:
            raise ValueError(f"code length {code.n} does not fill {cfg.n_coded_bits} coded bits per frame")
        msg = rng.integers(0, 2, size=(batch, code.k), dtype=np.uint8)
        bits = ldpc.encode(code, msg)
    else:
        msg = rng.integers(0, 2, size=(batch, cfg.n_coded_bits), dtype=np.uint8)
        bits = msg
    symbols = map_bits_to_qam(bits, cfg.bits_per_symbol)
    x = build_tx_grid(symbols, pilot_values(cfg), cfg)
    h = channel_model(cfg).sample(batch, rng)
    y = apply_channel(x, ChannelRealization(h=h, n0=n0), rng)
    return FrameBatch(
        msg=msg,
        bits=bits,
        bit_grid=bits_to_grid(bits, cfg),
        x=x,
        h=h,
        y=y,
        n0=n0,
        ebn0_db=ebn0,
    )
