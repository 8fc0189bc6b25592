import numpy as np
import pytest

from neurorx.classical import (
    LLR_CLIP,
    LSReceiver,
    demap_llr,
    interpolate_estimate,
    lmmse_combiner,
    lmmse_equalize,
    ls_estimate,
    max_log_llr,
)
from neurorx.link import generate_frames
from neurorx.phy import LinkConfig, constellation, pilot_values


def brute_force_llr(x, var, bps):
    """Direct sum of Gaussian likelihoods over every constellation point."""
    points, labels = constellation(bps)
    like = np.exp(-np.abs(x - points) ** 2 / var)
    return np.array([np.log(like[labels[:, i] == 1].sum() / like[labels[:, i] == 0].sum()) for i in range(bps)])


def bce(llr, bits):
    return np.mean(np.logaddexp(0, llr) - bits * llr)


class TestLsEstimate:
    def test_complex_division(self):
        assert ls_estimate(np.array([[[2 + 2j]]]), np.array([[1 + 1j]]))[0, 0, 0] == 2 + 0j

    def test_noiseless_recovery(self, rng):
        cfg = LinkConfig()
        fb = generate_frames(cfg, 2, 300.0, rng)
        est = LSReceiver(cfg, pilot_values(cfg)).estimate(fb.y)
        np.testing.assert_allclose(est.h, fb.h, atol=1e-9)

    def test_error_variance(self, rng):
        x_p = np.exp(2j * np.pi * rng.random((1, 100_000)))
        n = (rng.normal(size=(1, 100_000, 1)) + 1j * rng.normal(size=(1, 100_000, 1))) * np.sqrt(0.2 / 2)
        err = ls_estimate(x_p[..., None] + n, x_p) - 1.0
        assert np.mean(np.abs(err) ** 2) == pytest.approx(0.2, rel=0.02)

    def test_zero_pilot_rejected(self):
        with pytest.raises(ValueError):
            ls_estimate(np.ones((1, 1, 1)), np.zeros((1, 1)))


class TestInterpolation:
    def test_constant(self):
        cfg = LinkConfig()
        est = interpolate_estimate(np.full((2, 76, 2), 0.7 - 0.1j), cfg)
        np.testing.assert_allclose(est.h, 0.7 - 0.1j)

    def test_midway(self):
        cfg = LinkConfig()
        pil = np.zeros((2, 1, 1))
        pil[1] = 1.0
        h = interpolate_estimate(pil, cfg).h[:, 0, 0]
        assert h[2] == 0.0 and h[11] == 1.0
        assert h[6] == pytest.approx(4 / 9)
        assert (h[6] + h[7]) / 2 == pytest.approx(0.5)
        assert h[0] == 0.0 and h[13] == 1.0


class TestLmmse:
    def test_scalar_weight(self):
        assert lmmse_combiner(np.array([1.0 + 0j]), 1.0)[0] == pytest.approx(0.5)

    def test_zero_noise_inverts(self, rng):
        h = rng.normal(size=(5, 2)) + 1j * rng.normal(size=(5, 2))
        x = rng.normal(size=5) + 1j * rng.normal(size=5)
        eq = lmmse_equalize(h * x[:, None], h, 0.0)
        np.testing.assert_allclose(eq.x, x, atol=1e-12)

    def test_two_antenna_gain(self):
        one = lmmse_equalize(np.array([[1.0 + 0j]]), np.array([[1.0 + 0j]]), 1e-9).noise_var
        two = lmmse_equalize(np.array([[1.0, 1j]]), np.array([[1.0, 1j]]), 1e-9).noise_var
        assert one / two == pytest.approx(2.0, rel=1e-6)

    def test_erasure(self):
        eq = lmmse_equalize(np.array([[0.3 + 0j, 0.1]]), np.zeros((1, 2), complex), 0.5)
        assert np.isinf(eq.noise_var[0])
        np.testing.assert_array_equal(demap_llr(eq.x, eq.noise_var, 2), 0.0)


class TestDemapper:
    def test_in_phase_magnitude(self):
        llr = demap_llr(np.array(1 / np.sqrt(2) + 0j), np.array(1.0), 2)
        assert llr[0] == pytest.approx(-2.0)
        assert llr[1] == pytest.approx(0.0, abs=1e-12)

    def test_zero_input(self):
        np.testing.assert_allclose(demap_llr(np.zeros(3, complex), np.ones(3), 2), 0.0, atol=1e-12)

    def test_saturates(self):
        points, labels = constellation(2)
        llr = demap_llr(points, np.full(4, 1e-9), 2)
        np.testing.assert_array_equal(llr, np.where(labels == 1, LLR_CLIP, -LLR_CLIP))

    def test_qpsk_closed_form(self, rng):
        x = (rng.normal(size=50) + 1j * rng.normal(size=50)) * 0.5
        var = rng.uniform(0.5, 2.0, size=50)
        llr = demap_llr(x, var, 2, clip=np.inf)
        np.testing.assert_allclose(llr[:, 0], -2 * np.sqrt(2) * x.real / var, atol=1e-9)
        np.testing.assert_allclose(llr[:, 1], -2 * np.sqrt(2) * x.imag / var, atol=1e-9)

    @pytest.mark.parametrize("bps", [2, 4, 6])
    def test_brute_force(self, bps, rng):
        for _ in range(5):
            x, var = rng.normal() + 1j * rng.normal(), rng.uniform(0.05, 1.0)
            np.testing.assert_allclose(demap_llr(np.array(x), np.array(var), bps, clip=np.inf),
                                       brute_force_llr(x, var, bps), atol=1e-9)

    def test_antisymmetric_under_relabeling(self, rng):
        # negating x swaps every QPSK label bit
        x = rng.normal(size=20) + 1j * rng.normal(size=20)
        np.testing.assert_allclose(demap_llr(-x, np.ones(20), 2), -demap_llr(x, np.ones(20), 2))

    def test_exact_beats_max_log(self, rng):
        cfg = LinkConfig(bits_per_symbol=4)
        fb = generate_frames(cfg, 100, 2.0, rng, coded=False)
        # perfect CSI keeps the Gaussian model exact
        eq = lmmse_equalize(fb.y, fb.h, fb.n0)
        mask = cfg.data_mask
        exact = demap_llr(eq.x, eq.noise_var, 4)[:, mask]
        approx = max_log_llr(eq.x, eq.noise_var, 4)[:, mask]
        bits = fb.bit_grid[:, mask]
        assert bce(exact, bits) <= bce(approx, bits)


class TestReceiver:
    @pytest.mark.parametrize("ebn0", [0.0, 4.0])
    def test_perfect_csi_dominates(self, ebn0, rng):
        cfg = LinkConfig()
        rx = LSReceiver(cfg, pilot_values(cfg))
        fb = generate_frames(cfg, 60, ebn0, rng, coded=False)
        mask = cfg.data_mask
        truth = fb.bit_grid[:, mask]
        ber_ls = np.mean((rx.llr(fb.y, fb.n0)[:, mask] > 0) != truth)
        ber_pc = np.mean((rx.llr(fb.y, fb.n0, h=fb.h)[:, mask] > 0) != truth)
        assert truth.size >= 1e5
        assert ber_pc <= ber_ls
