"""Input checks shared by the receivers."""

from __future__ import annotations

import numpy as np

from .phy import LinkConfig


def check_grid(y, link: LinkConfig, name: str = "y") -> np.ndarray:
    """Return ``y`` as a complex ``(B, n_sym, n_sc, n_rx)`` array.

    A single unbatched grid gains a leading batch axis of one.

    Raises:
        ValueError: on a wrong shape or non-finite entries.
    """
    arr = np.asarray(y)
    if arr.ndim == 3:
        arr = arr[None]
    expected = (link.n_sym, link.n_sc, link.n_rx)
    if arr.ndim != 4 or arr.shape[1:] != expected:
        raise ValueError(f"{name} must have shape (B, {', '.join(map(str, expected))}), got {np.shape(y)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr.astype(np.complex128, copy=False)


def check_noise(n0, batch: int) -> np.ndarray:
    """Return the noise variance as a positive ``(batch,)`` array."""
    arr = np.asarray(n0, dtype=float)
    if arr.ndim == 0:
        arr = np.full(batch, float(arr))
    if arr.shape != (batch,):
        raise ValueError(f"n0 must be a scalar or have shape ({batch},), got {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("n0 must be positive and finite")
    return arr


def check_bits(bits, shape: tuple[int, ...], name: str = "bits") -> np.ndarray:
    arr = np.asarray(bits)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0 and 1")
    return arr.astype(np.uint8, copy=False)
