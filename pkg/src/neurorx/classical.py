"""Conventional receiver: LS pilot estimates, time interpolation, LMMSE combining, exact demapping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .phy import LinkConfig, constellation

LLR_CLIP = 20.0


@dataclass
class ChannelEstimate:
    """Full-grid channel estimate ``(..., n_sym, n_sc, n_rx)``.

    ``measured`` flags the rows (OFDM symbols) that came directly from pilots.
    """

    h: np.ndarray
    measured: np.ndarray


@dataclass
class EqualizedGrid:
    """Bias-compensated symbol estimates and their effective noise variance.

    ``noise_var`` is ``inf`` where the estimated channel vanished (erasure).
    """

    x: np.ndarray
    noise_var: np.ndarray


def ls_estimate(y_p: np.ndarray, x_p: np.ndarray) -> np.ndarray:
    """Least-squares estimate ``y_p / x_p`` at pilot REs, broadcast over antennas.

    Args:
        y_p: received pilots ``(..., n_pilot_sym, n_sc, n_rx)``.
        x_p: transmitted pilots ``(n_pilot_sym, n_sc)``.
    """
    x_p = np.asarray(x_p)
    if np.any(x_p == 0):
        raise ValueError("pilot symbols must be nonzero")
    return np.asarray(y_p) / x_p[..., None]


def time_interpolation_weights(cfg: LinkConfig) -> np.ndarray:
    """``(n_sym, n_pilot_sym)`` weights for linear interpolation between pilot symbols.

    Outside the pilot span the nearest pilot is held constant.
    """
    order = np.argsort(cfg.pilot_symbols)
    pilots = np.asarray(cfg.pilot_symbols)[order]
    k = np.arange(cfg.n_sym)
    weights = np.zeros((cfg.n_sym, len(pilots)))
    for j in range(len(pilots)):
        basis = np.zeros(len(pilots))
        basis[j] = 1.0
        weights[:, order[j]] = np.interp(k, pilots, basis)
    return weights


def interpolate_estimate(pilot_estimates: np.ndarray, cfg: LinkConfig) -> ChannelEstimate:
    """Spread pilot-row estimates ``(..., n_pilot_sym, n_sc, n_rx)`` over all OFDM symbols."""
    w = time_interpolation_weights(cfg)
    h = np.einsum("kp,...psn->...ksn", w, pilot_estimates)
    measured = np.zeros(cfg.n_sym, dtype=bool)
    measured[list(cfg.pilot_symbols)] = True
    # pilot rows keep their measured values bit-exactly
    h[..., list(cfg.pilot_symbols), :, :] = pilot_estimates
    return ChannelEstimate(h=h, measured=measured)


def lmmse_combiner(h: np.ndarray, n0, es: float = 1.0) -> np.ndarray:
    """Per-RE SIMO LMMSE weights ``h^H / (|h|^2 + n0/es)``, shape ``(..., n_rx)``.

    This is the single-stream case of ``(H^H H + s^2/Es I)^-1 H^H``; the inverse is scalar.
    """
    n0 = _expand(n0, h.ndim - 1)
    energy = np.sum(np.abs(h) ** 2, axis=-1, keepdims=True)
    return np.conj(h) / (energy + n0[..., None] / es)


def lmmse_equalize(y: np.ndarray, est: ChannelEstimate | np.ndarray, n0, es: float = 1.0) -> EqualizedGrid:
    """LMMSE-combine antennas and remove the MMSE bias.

    Returns ``x = (w.y)/(w.h)`` with effective noise variance ``n0 |w|^2 / |w.h|^2``.
    REs with an all-zero channel estimate are erasures.
    """
    h = est.h if isinstance(est, ChannelEstimate) else np.asarray(est)
    if h.shape != y.shape:
        raise ValueError(f"estimate shape {h.shape} does not match received grid {y.shape}")
    w = lmmse_combiner(h, n0, es)
    gain = np.sum(w * h, axis=-1)
    raw = np.sum(w * y, axis=-1)
    n0e = _expand(n0, h.ndim - 1)
    w_energy = np.sum(np.abs(w) ** 2, axis=-1)
    erased = np.abs(gain) == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(erased, 0.0, raw / np.where(erased, 1.0, gain))
        noise_var = np.where(erased, np.inf, n0e * w_energy / np.where(erased, 1.0, np.abs(gain) ** 2))
    return EqualizedGrid(x=x, noise_var=noise_var)


def _expand(n0, ndim: int) -> np.ndarray:
    n0 = np.asarray(n0, dtype=float)
    return n0.reshape(n0.shape + (1,) * (ndim - n0.ndim))


def demap_llr(x: np.ndarray, noise_var: np.ndarray, bits_per_symbol: int, clip: float = LLR_CLIP) -> np.ndarray:
    """Exact per-bit LLRs ``log P(b=1)/P(b=0)`` under complex Gaussian noise.

    Args:
        x: equalized symbols, any shape.
        noise_var: effective complex noise variance, broadcastable to ``x``;
            ``inf`` marks an erasure (LLR 0).

    Returns:
        Array of shape ``x.shape + (bits_per_symbol,)`` clipped to ``[-clip, clip]``.
    """
    points, labels = constellation(bits_per_symbol)
    x = np.asarray(x)
    noise_var = np.broadcast_to(np.asarray(noise_var, dtype=float), x.shape)
    erased = ~np.isfinite(noise_var)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(erased | (noise_var <= 0), 0.0, 1.0 / noise_var)
    exact = ~erased & (noise_var <= 0)
    metric = -np.abs(x[..., None] - points) ** 2 * inv[..., None]  # (..., M)
    llr = np.empty(x.shape + (bits_per_symbol,))
    for i in range(bits_per_symbol):
        ones = labels[:, i] == 1
        llr[..., i] = logsumexp(metric[..., ones], axis=-1) - logsumexp(metric[..., ~ones], axis=-1)
    if np.any(exact):
        # zero noise: hard decision at the clip level from the nearest point
        nearest = np.argmin(np.abs(x[..., None] - points), axis=-1)
        hard = np.where(labels[nearest] == 1, clip, -clip)
        llr[exact] = hard[exact]
    llr[erased] = 0.0
    return np.clip(llr, -clip, clip)


def max_log_llr(x: np.ndarray, noise_var: np.ndarray, bits_per_symbol: int, clip: float = LLR_CLIP) -> np.ndarray:
    """Max-log approximation of :func:`demap_llr` (reference for comparisons)."""
    points, labels = constellation(bits_per_symbol)
    metric = -np.abs(np.asarray(x)[..., None] - points) ** 2 / np.asarray(noise_var)[..., None]
    llr = np.stack(
        [metric[..., labels[:, i] == 1].max(-1) - metric[..., labels[:, i] == 0].max(-1) for i in range(bits_per_symbol)],
        axis=-1,
    )
    return np.clip(llr, -clip, clip)


class LSReceiver:
    """LS + linear time interpolation + LMMSE + exact demapper, bound to a link."""

    def __init__(self, cfg: LinkConfig, pilots: np.ndarray):
        self.cfg = cfg
        self.pilots = np.asarray(pilots)

    def estimate(self, y: np.ndarray) -> ChannelEstimate:
        cfg = self.cfg
        y_p = y[..., list(cfg.pilot_symbols), :, :]
        return interpolate_estimate(ls_estimate(y_p, self.pilots), cfg)

    def llr(self, y: np.ndarray, n0, h: np.ndarray | None = None) -> np.ndarray:
        """LLR grid ``(..., n_sym, n_sc, bits)``; pass ``h`` to bypass estimation (perfect CSI)."""
        est = self.estimate(y) if h is None else h
        eq = lmmse_equalize(y, est, n0)
        return demap_llr(eq.x, eq.noise_var, self.cfg.bits_per_symbol)
