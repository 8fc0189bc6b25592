from __future__ import annotations

import numpy as np


def preprocess_input(y: np.ndarray, n0) -> np.ndarray:
    """Real network input from a received grid.

    Args:
        y: complex grid ``(n_sym, n_sc, n_rx)`` or ``(B, n_sym, n_sc, n_rx)``.
        n0: noise variance, scalar or one value per batch entry.

    Returns:
        ``(..., n_sym, n_sc, 2*n_rx + 1)``: real parts of every antenna, then
        imaginary parts, then a constant ``log10(n0)`` plane.
    """
    y = np.asarray(y)
    if y.ndim not in (3, 4):
        raise ValueError(f"expected a (B,) n_sym x n_sc x n_rx grid, got shape {y.shape}")
    n0 = np.asarray(n0, dtype=float)
    if np.any(n0 <= 0):
        raise ValueError("noise variance must be positive")
    lead = y.shape[:-3]
    if n0.ndim and n0.shape != lead:
        raise ValueError(f"n0 shape {n0.shape} does not match batch shape {lead}")
    plane = np.broadcast_to(np.log10(n0).reshape(n0.shape + (1, 1, 1)), y.shape[:-1] + (1,))
    return np.concatenate([y.real, y.imag, plane], axis=-1)
