"""Finite-difference gradient checks of every differentiable op and of the full networks.

Everything runs in 64-bit mode. Ops use random small inputs and a
central-difference step of 1e-5; the networks use a 4 x 6 grid toy link
and a 1% parameter sample (at least 40 entries).
"""

from __future__ import annotations

import numpy as np

from .autodiff import ops
from .autodiff.gradcheck import check_gradients
from .autodiff.tensor import Tensor, precision

OP_TOLERANCE = 1e-4
MODEL_TOLERANCE = 1e-3


def _leaf(rng, *shape, positive: bool = False) -> Tensor:
    data = rng.uniform(0.5, 2.0, size=shape) if positive else rng.normal(size=shape)
    return Tensor(data, requires_grad=True)


def _weighted(out: Tensor, rng) -> Tensor:
    """Random linear functional of ``out`` so every output entry matters."""
    return ops.sum(out * Tensor(rng.normal(size=out.shape)))


def op_cases(rng):
    """``(name, loss_fn, leaves)`` for every op."""
    cases = []
    a, b = _leaf(rng, 3, 4), _leaf(rng, 4, 2)
    cases.append(("matmul", lambda a=a, b=b, w=rng.normal(size=(3, 2)): ops.sum(ops.matmul(a, b) * w), [a, b]))
    a, b = _leaf(rng, 2, 3, 4), _leaf(rng, 4, 5)
    cases.append(("matmul (batched)", lambda a=a, b=b, w=rng.normal(size=(2, 3, 5)): ops.sum(ops.matmul(a, b) * w), [a, b]))
    x, w, bias = _leaf(rng, 2, 3, 4), _leaf(rng, 4, 5), _leaf(rng, 5)
    cases.append(("dense", lambda x=x, w=w, bias=bias: _weighted(ops.dense(x, w, bias), np.random.default_rng(1)), [x, w, bias]))
    for k in (3, 1):
        x, kern, bias = _leaf(rng, 2, 4, 5, 3), _leaf(rng, k, k, 3, 2), _leaf(rng, 2)
        cases.append((f"conv2d {k}x{k}", lambda x=x, kern=kern, bias=bias, s=k: _weighted(ops.conv2d(x, kern, bias), np.random.default_rng(s)), [x, kern, bias]))
    x = _leaf(rng, 3, 5)
    cases.append(("softmax", lambda x=x: _weighted(ops.softmax(x, axis=-1), np.random.default_rng(2)), [x]))
    x, g, s = _leaf(rng, 3, 6), _leaf(rng, 6), _leaf(rng, 6)
    cases.append(("layer_norm", lambda x=x, g=g, s=s: _weighted(ops.layer_norm(x, g, s), np.random.default_rng(3)), [x, g, s]))
    x, alpha = _leaf(rng, 4, 3), _leaf(rng, 3)
    x.data[np.abs(x.data) < 0.05] += 0.1  # keep away from the kink
    cases.append(("prelu", lambda x=x, alpha=alpha: _weighted(ops.prelu(x, alpha), np.random.default_rng(4)), [x, alpha]))
    x = _leaf(rng, 4, 5)
    cases.append(("dropout (fixed mask)",
                  lambda x=x: _weighted(ops.dropout(x, 0.3, True, np.random.default_rng(5)), np.random.default_rng(6)), [x]))
    z = _leaf(rng, 4, 3)
    bits = rng.integers(0, 2, size=(4, 3))
    mask = rng.random((4, 3)) > 0.3
    mask[0, 0] = True
    cases.append(("bce_with_logits", lambda z=z: ops.bce_with_logits(z, bits, mask), [z]))
    a, b = _leaf(rng, 3, 4), _leaf(rng, 4)
    cases.append(("add/sub/mul (broadcast)", lambda a=a, b=b: _weighted((a + b) * a - b, np.random.default_rng(7)), [a, b]))
    a, b = _leaf(rng, 3, 4), _leaf(rng, 3, 4, positive=True)
    cases.append(("div", lambda a=a, b=b: _weighted(a / b, np.random.default_rng(8)), [a, b]))
    x = _leaf(rng, 3, 4, positive=True)
    cases.append(("exp/log", lambda x=x: _weighted(ops.log(x) + ops.exp(x * 0.5), np.random.default_rng(9)), [x]))
    x = _leaf(rng, 2, 3, 4)
    cases.append(("sum/mean", lambda x=x: ops.sum(ops.mean(x, axis=1) * Tensor(np.arange(8.0).reshape(2, 4))) + ops.sum(x, axis=(0, 2)).sum(), [x]))
    x = _leaf(rng, 2, 3, 4)
    cases.append(("reshape/transpose/swapaxes",
                  lambda x=x: _weighted(x.reshape(6, 4).transpose(1, 0).reshape(4, 3, 2).swapaxes(0, 2), np.random.default_rng(10)), [x]))
    x = _leaf(rng, 5, 4)
    cases.append(("getitem", lambda x=x: _weighted(x[np.array([0, 2, 2, 4])][:, 1:3], np.random.default_rng(11)), [x]))
    a, b = _leaf(rng, 2, 3), _leaf(rng, 2, 2)
    cases.append(("concat", lambda a=a, b=b: _weighted(ops.concat([a, b], axis=-1), np.random.default_rng(12)), [a, b]))
    return cases


def toy_models(seed: int = 0):
    """Small networks on a 4 x 6 grid, two antennas, QPSK."""
    from .models import DatConfig, RdnlaConfig, build_model

    n_sym, n_sc, feats, bits = 4, 6, 5, 2
    return {
        "dat": build_model("dat", n_sym, n_sc, feats, bits, DatConfig(width=8, heads=2, ffn_hidden=8), seed),
        "transformer": build_model("transformer", n_sym, n_sc, feats, bits, DatConfig(width=8, heads=2, ffn_hidden=8), seed),
        "rdnla": build_model("rdnla", n_sym, n_sc, feats, bits, RdnlaConfig(channels=4, dropout=0.0), seed),
    }


def model_loss_fn(model, seed: int = 0):
    rng = np.random.default_rng(seed)
    n_sym, n_sc, feats, bits = model.dims
    x = rng.normal(size=(2, n_sym, n_sc, feats))
    target = rng.integers(0, 2, size=(2, n_sym, n_sc, bits))
    mask = np.ones(target.shape, dtype=bool)
    mask[:, 1] = False  # a pilot row
    return lambda: ops.bce_with_logits(model(x), target, mask)


def run_gradcheck_suite(seed: int = 0) -> list[tuple[str, float, float]]:
    """``(name, max relative error, tolerance)`` for every op and network."""
    results = []
    with precision("float64"):
        rng = np.random.default_rng(seed)
        for name, fn, leaves in op_cases(rng):
            results.append((name, check_gradients(fn, leaves, step=1e-5), OP_TOLERANCE))
        for name, model in toy_models(seed).items():
            model.eval()
            params = model.parameters()
            total = sum(p.size for p in params)
            sample = max(40, total // 100)
            err = check_gradients(model_loss_fn(model, seed), params, step=1e-5, sample=sample,
                                  rng=np.random.default_rng(seed))
            results.append((f"{name} end-to-end", err, MODEL_TOLERANCE))
    return results
