"""Differentiable operations over :class:`Tensor`.

Only what the receiver networks need: elementwise arithmetic with
broadcasting, batched matmul, dense and 2-D convolution layers, softmax,
layer normalisation, PReLU, dropout, shape manipulation and a fused
binary cross-entropy on logits.
"""

from __future__ import annotations

import builtins

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Tensor, as_tensor, get_default_dtype


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _coerce(a, b) -> tuple[Tensor, Tensor]:
    a = as_tensor(a)
    b = b if isinstance(b, Tensor) else Tensor(np.asarray(b, dtype=a.dtype))
    return a, b


# ---------------------------------------------------------------------------
# elementwise
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _coerce(a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._from_op(a.data + b.data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _coerce(a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor._from_op(a.data - b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _coerce(a, b)

    def backward(g):
        ga = _unbroadcast(g * b.data, a.shape) if a.requires_grad else None
        gb = _unbroadcast(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return Tensor._from_op(a.data * b.data, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = _coerce(a, b)

    def backward(g):
        ga = _unbroadcast(g / b.data, a.shape) if a.requires_grad else None
        gb = _unbroadcast(-g * a.data / (b.data * b.data), b.shape) if b.requires_grad else None
        return ga, gb

    return Tensor._from_op(a.data / b.data, (a, b), backward)


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)
    return Tensor._from_op(out, (x,), lambda g: (g * out,))


def log(x: Tensor) -> Tensor:
    return Tensor._from_op(np.log(x.data), (x,), lambda g: (g / x.data,))


# ---------------------------------------------------------------------------
# reductions and shape
# ---------------------------------------------------------------------------

def sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return Tensor._from_op(np.asarray(out), (x,), backward)


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = x.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([x.shape[a] for a in axes]))
    return mul(sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(x: Tensor, shape) -> Tensor:
    return Tensor._from_op(x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),))


def transpose(x: Tensor, axes=None) -> Tensor:
    if axes is None:
        axes = tuple(reversed(range(x.ndim)))
    inverse = tuple(np.argsort(axes))
    return Tensor._from_op(x.data.transpose(axes), (x,), lambda g: (g.transpose(inverse),))


def swapaxes(x: Tensor, a: int, b: int) -> Tensor:
    return Tensor._from_op(x.data.swapaxes(a, b), (x,), lambda g: (g.swapaxes(a, b),))


def getitem(x: Tensor, index) -> Tensor:
    def backward(g):
        full = np.zeros_like(x.data)
        if _is_advanced(index):
            np.add.at(full, index, g)
        else:
            full[index] = g
        return (full,)

    return Tensor._from_op(x.data[index], (x,), backward)


def _is_advanced(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return builtins.any(isinstance(i, (list, np.ndarray)) for i in items)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, sizes, axis=axis))

    return Tensor._from_op(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


# ---------------------------------------------------------------------------
# linear algebra
# ---------------------------------------------------------------------------

def matmul(a, b) -> Tensor:
    """Batched matrix product ``a @ b`` with numpy broadcasting over leading axes.

    Raises:
        DimensionError: if the contracted extents differ.
    """
    a, b = _coerce(a, b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward(g):
        ga = _unbroadcast(g @ b.data.swapaxes(-1, -2), a.shape) if a.requires_grad else None
        gb = _unbroadcast(a.data.swapaxes(-1, -2) @ g, b.shape) if b.requires_grad else None
        return ga, gb

    return Tensor._from_op(a.data @ b.data, (a, b), backward)


def dense(x, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Affine map over the last axis: ``x @ w + b``."""
    x = as_tensor(x)
    if w.ndim != 2 or x.shape[-1] != w.shape[0]:
        raise DimensionError(f"dense: input {x.shape} incompatible with weight {w.shape}")
    if b is not None and b.shape != (w.shape[1],):
        raise DimensionError(f"dense: bias {b.shape} does not match weight {w.shape}")
    lead = x.shape[:-1]
    x2 = x.data.reshape(-1, w.shape[0])
    out = x2 @ w.data
    if b is not None:
        out += b.data
    out = out.reshape(*lead, w.shape[1])

    def backward(g):
        g2 = g.reshape(-1, w.shape[1])
        gx = (g2 @ w.data.T).reshape(x.shape) if x.requires_grad else None
        gw = x2.T @ g2 if w.requires_grad else None
        gb = g2.sum(axis=0) if b is not None and b.requires_grad else None
        return gx, gw, gb

    parents = (x, w) if b is None else (x, w, b)
    return Tensor._from_op(out, parents, backward)


def conv2d(x, kernels: Tensor, bias: Tensor | None = None) -> Tensor:
    """'Same'-padded 2-D cross-correlation on channel-last input.

    Args:
        x: ``(H, W, Cin)`` or ``(B, H, W, Cin)``.
        kernels: ``(kh, kw, Cin, Cout)`` with odd ``kh`` and ``kw``.
        bias: ``(Cout,)`` or None.

    Returns:
        Tensor with the spatial extent of ``x`` and ``Cout`` channels.
    """
    x = as_tensor(x)
    kh, kw, cin, cout = kernels.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise DimensionError(f"conv2d needs odd kernel extents, got {kh}x{kw}")
    if x.shape[-1] != cin:
        raise DimensionError(f"conv2d: input has {x.shape[-1]} channels, kernels expect {cin}")
    if bias is not None and bias.shape != (cout,):
        raise DimensionError(f"conv2d: bias {bias.shape} does not match {cout} output channels")
    unbatched = x.ndim == 3
    xd = x.data[None] if unbatched else x.data
    batch, height, width, _ = xd.shape
    ph, pw = kh // 2, kw // 2

    if kh == 1 and kw == 1:
        cols = xd.reshape(-1, cin)
    else:
        padded = np.pad(xd, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
        # (B, H, W, Cin, kh, kw) view -> contiguous im2col matrix
        cols = sliding_window_view(padded, (kh, kw), axis=(1, 2)).reshape(-1, cin * kh * kw)
    kmat = kernels.data.transpose(2, 0, 1, 3).reshape(cin * kh * kw, cout)
    out = cols @ kmat
    if bias is not None:
        out += bias.data
    out = out.reshape(batch, height, width, cout)
    if unbatched:
        out = out[0]

    def backward(g):
        g2 = g.reshape(-1, cout)
        gk = gb = gx = None
        if kernels.requires_grad:
            gk = (cols.T @ g2).reshape(cin, kh, kw, cout).transpose(1, 2, 0, 3)
        if bias is not None and bias.requires_grad:
            gb = g2.sum(axis=0)
        if x.requires_grad:
            gcols = (g2 @ kmat.T).reshape(batch, height, width, cin, kh, kw)
            if kh == 1 and kw == 1:
                gx = gcols.reshape(batch, height, width, cin)
            else:
                gpad = np.zeros((batch, height + 2 * ph, width + 2 * pw, cin), dtype=g.dtype)
                for i in range(kh):
                    for j in range(kw):
                        gpad[:, i:i + height, j:j + width, :] += gcols[..., i, j]
                gx = gpad[:, ph:ph + height, pw:pw + width, :]
            if unbatched:
                gx = gx[0]
        return gx, gk, gb

    parents = (x, kernels) if bias is None else (x, kernels, bias)
    return Tensor._from_op(out, parents, backward)


# ---------------------------------------------------------------------------
# nonlinearities and normalisation
# ---------------------------------------------------------------------------

def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax along ``axis``."""
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    out = np.exp(shifted, out=shifted)
    out /= out.sum(axis=axis, keepdims=True)

    def backward(g):
        gx = g * out
        gx -= out * gx.sum(axis=axis, keepdims=True)
        return (gx,)

    return Tensor._from_op(out, (x,), backward)


def layer_norm(x: Tensor, gain: Tensor, shift: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalise the last axis to zero mean / unit variance, then apply ``gain`` and ``shift``."""
    d = x.shape[-1]
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    out = xhat * gain.data + shift.data

    def backward(g):
        lead = tuple(range(g.ndim - 1))
        gg = (g * xhat).sum(axis=lead) if gain.requires_grad else None
        gs = g.sum(axis=lead) if shift.requires_grad else None
        gx = None
        if x.requires_grad:
            gxhat = g * gain.data
            gx = inv_std * (
                gxhat
                - gxhat.mean(axis=-1, keepdims=True)
                - xhat * (gxhat * xhat).mean(axis=-1, keepdims=True)
            )
        return gx, gg, gs

    if d < 1:
        raise DimensionError("layer_norm needs a non-empty last axis")
    return Tensor._from_op(out, (x, gain, shift), backward)


def prelu(x: Tensor, alpha: Tensor) -> Tensor:
    """Parametric ReLU; ``alpha`` broadcasts over the last (channel) axis."""
    positive = x.data >= 0
    out = np.where(positive, x.data, alpha.data * x.data)

    def backward(g):
        gx = np.where(positive, g, g * alpha.data) if x.requires_grad else None
        ga = None
        if alpha.requires_grad:
            ga = _unbroadcast(np.where(positive, 0.0, g * x.data).astype(g.dtype), alpha.shape)
        return gx, ga

    return Tensor._from_op(out, (x, alpha), backward)


def relu(x: Tensor) -> Tensor:
    positive = x.data > 0
    return Tensor._from_op(x.data * positive, (x,), lambda g: (g * positive,))


def dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: zero with probability ``rate`` and rescale survivors in training."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an explicit rng")
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return Tensor._from_op(x.data * keep, (x,), lambda g: (g * keep,))


def softplus(x: Tensor) -> Tensor:
    out = np.logaddexp(0.0, x.data)
    sig = _sigmoid(x.data)
    return Tensor._from_op(out.astype(x.dtype), (x,), lambda g: (g * sig,))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_with_logits(logits: Tensor, targets, mask=None) -> Tensor:
    """Mean binary cross-entropy between ``targets`` in {0,1} and logit predictions.

    Uses ``softplus(z) - b*z`` which equals ``-[b log s(z) + (1-b) log(1-s(z))]``
    without overflow. Entries where ``mask`` is False are ignored.
    """
    z = logits.data
    b = np.asarray(targets, dtype=z.dtype)
    if b.shape != z.shape:
        raise DimensionError(f"bce: targets {b.shape} do not match logits {z.shape}")
    if mask is None:
        weight = np.ones_like(z)
    else:
        weight = np.broadcast_to(np.asarray(mask, dtype=bool), z.shape).astype(z.dtype)
    count = weight.sum()
    if count == 0:
        raise ValueError("bce: mask selects no entries")
    per_entry = np.logaddexp(0.0, z) - b * z
    value = np.asarray((per_entry * weight).sum() / count, dtype=z.dtype)

    def backward(g):
        return (g * (_sigmoid(z) - b) * weight / count,)

    return Tensor._from_op(value, (logits,), backward)


def zeros(shape, requires_grad: bool = False) -> Tensor:
    return Tensor(np.zeros(shape, dtype=get_default_dtype()), requires_grad=requires_grad)
