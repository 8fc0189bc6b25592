"""Central finite-difference gradient checks."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


def numerical_grad(fn: Callable[[], Tensor], tensor: Tensor, step: float = 1e-5, indices=None) -> np.ndarray:
    """Central-difference estimate of d fn() / d tensor at the given flat indices (all by default)."""
    flat = tensor.data.reshape(-1)
    idx = range(flat.size) if indices is None else indices
    out = np.zeros(flat.size)
    for i in idx:
        orig = flat[i]
        flat[i] = orig + step
        plus = fn().item()
        flat[i] = orig - step
        minus = fn().item()
        flat[i] = orig
        out[i] = (plus - minus) / (2 * step)
    return out.reshape(tensor.shape)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """Max over entries of |a-n| / max(|a|, |n|, floor)."""
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def check_gradients(
    fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    step: float = 1e-5,
    sample: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Compare autodiff gradients of a scalar ``fn()`` with central differences.

    Args:
        fn: closure rebuilding the graph from the current tensor values.
        tensors: leaves (``requires_grad=True``) to check.
        sample: if given, check only this many randomly chosen entries overall.

    Returns:
        Maximum relative error over all checked entries.
    """
    for t in tensors:
        t.grad = None
    fn().backward()
    analytic = [t.grad.copy() for t in tensors]

    chosen: list[list[int] | None] = [None] * len(tensors)
    if sample is not None:
        rng = rng or np.random.default_rng(0)
        sizes = np.array([t.size for t in tensors])
        picks = rng.choice(sizes.sum(), size=min(sample, sizes.sum()), replace=False)
        bounds = np.concatenate([[0], np.cumsum(sizes)])
        chosen = [sorted(int(p - bounds[i]) for p in picks if bounds[i] <= p < bounds[i + 1]) for i in range(len(tensors))]

    worst = 0.0
    for t, a, idx in zip(tensors, analytic, chosen):
        if idx is not None and not idx:
            continue
        num = numerical_grad(fn, t, step=step, indices=idx)
        if idx is None:
            worst = max(worst, relative_error(a, num))
        else:
            worst = max(worst, relative_error(a.reshape(-1)[idx], num.reshape(-1)[idx]))
    return worst
