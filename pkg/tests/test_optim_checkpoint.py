import struct

import numpy as np
import pytest

from neurorx.autodiff import Adam, Tensor, ops
from neurorx.autodiff.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from neurorx.autodiff.layers import glorot_uniform, he_uniform
from neurorx.models import DatConfig, build_model
from neurorx.models.io import load_model, save_model
from neurorx.phy import LinkConfig


class TestAdam:
    def test_zero_gradient_no_change(self, rng):
        p = Tensor(rng.normal(size=4), requires_grad=True)
        before = p.data.copy()
        opt = Adam({"p": p})
        p.grad = np.zeros(4, dtype=p.dtype)
        opt.step()
        np.testing.assert_array_equal(p.data, before)

    def test_first_step_is_lr_sign(self, f64):
        p = Tensor(np.zeros(3), requires_grad=True)
        opt = Adam({"p": p}, lr=1e-3)
        p.grad = np.array([0.5, -2.0, 1e-3])
        opt.step()
        # bias-corrected first step: -lr * g / (|g| + eps)
        np.testing.assert_allclose(p.data, -1e-3 * np.sign(p.grad), rtol=1e-4)

    def test_quadratic_bowl(self, f64):
        p = Tensor(np.array([3.0]), requires_grad=True)
        opt = Adam({"p": p}, lr=1e-2)
        for step in range(5000):
            opt.zero_grad()
            loss = ops.sum(p * p)
            if loss.item() < 1e-6:
                break
            loss.backward()
            opt.step()
        assert loss.item() < 1e-6

    def test_step_counter(self, rng):
        p = Tensor(rng.normal(size=2), requires_grad=True)
        opt = Adam({"p": p})
        for _ in range(3):
            p.grad = np.ones(2, dtype=p.dtype)
            opt.step()
        assert opt.state.step == 3


class TestInit:
    def test_glorot_bounds(self, rng):
        w = glorot_uniform(rng, 30, 50, (30, 50))
        limit = np.sqrt(6 / 80)
        assert np.abs(w).max() <= limit
        assert np.var(w) == pytest.approx(2 / 80, rel=0.1)

    def test_he_bounds(self, rng):
        w = he_uniform(rng, 90, (3, 3, 10, 40))
        assert np.abs(w).max() <= np.sqrt(6 / 90)
        assert np.var(w) == pytest.approx(2 / 90, rel=0.1)


class TestCheckpoint:
    def test_round_trip(self, tmp_path, rng):
        arrays = {"a": rng.normal(size=(2, 3)).astype(np.float32), "b.c": np.arange(4, dtype=np.float32)}
        save_checkpoint(tmp_path / "x.ckpt", {"k": [1, 2]}, arrays)
        header, loaded = load_checkpoint(tmp_path / "x.ckpt")
        assert header == {"k": [1, 2]}
        for name in arrays:
            np.testing.assert_array_equal(loaded[name], arrays[name])

    def test_layout(self, tmp_path):
        save_checkpoint(tmp_path / "x.ckpt", {}, {"w": np.array([[1.5]], dtype=np.float32)})
        raw = (tmp_path / "x.ckpt").read_bytes()
        assert raw[:4] == b"NRXC"
        assert raw.endswith(struct.pack("<f", 1.5))

    def test_bad_magic(self, tmp_path):
        (tmp_path / "x.ckpt").write_bytes(b"JUNKJUNK")
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "x.ckpt")

    def test_truncated(self, tmp_path):
        save_checkpoint(tmp_path / "x.ckpt", {}, {"w": np.ones((10, 10), dtype=np.float32)})
        raw = (tmp_path / "x.ckpt").read_bytes()
        (tmp_path / "x.ckpt").write_bytes(raw[:-20])
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "x.ckpt")

    def test_missing(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "nope.ckpt")


class TestModelIo:
    def test_round_trip_reproduces_output(self, tmp_path, toy_link, rng):
        model = build_model("dat", 4, 6, 5, 2, DatConfig(width=8, heads=2, ffn_hidden=8), seed=2)
        save_model(tmp_path / "m.ckpt", model, toy_link, seed=2)
        loaded, header, _ = load_model(tmp_path / "m.ckpt", toy_link)
        x = rng.normal(size=(1, 4, 6, 5))
        np.testing.assert_array_equal(loaded(x).data, model(x).data)
        assert loaded.kind == "dat"

    def test_incompatible_link(self, tmp_path, toy_link):
        model = build_model("dat", 4, 6, 5, 2, DatConfig(width=8, heads=2, ffn_hidden=8))
        save_model(tmp_path / "m.ckpt", model, toy_link, seed=0)
        with pytest.raises(CheckpointError, match="n_sc"):
            load_model(tmp_path / "m.ckpt", LinkConfig(n_sym=4, n_sc=8, pilot_symbols=(1,)))

    def test_wrong_kind(self, tmp_path, toy_link):
        model = build_model("dat", 4, 6, 5, 2, DatConfig(width=8, heads=2, ffn_hidden=8))
        save_model(tmp_path / "m.ckpt", model, toy_link, seed=0)
        with pytest.raises(CheckpointError):
            load_model(tmp_path / "m.ckpt", toy_link, kind="rdnla")
