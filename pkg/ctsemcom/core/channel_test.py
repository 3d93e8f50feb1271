import unittest

import numpy as np

from ctsemcom.core.channel import (
    apply_faded_uplink,
    faded_superposition,
    sample_awgn,
    sample_rayleigh,
)
from ctsemcom.core.exceptions import ShapeMismatch
from ctsemcom.core.rng import RngStream, Substream, trial_stream
from ctsemcom.domains.signals import ChannelTensor, NoiseBlock, ReceivedStage, transmit_blocks
from ctsemcom.domains.system import SystemConfig


def _config(**overrides) -> SystemConfig:
    values = dict(
        n_users=2,
        n_symbols=1,
        n_subcarriers=50_000,
        power_budget=[0.8, 0.2],
        sigma_e_sq=0.25,
        sigma_f_db=3.0,
    )
    values.update(overrides)
    return SystemConfig(**values)


class TestRngStream(unittest.TestCase):
    def test_same_key_same_draws(self):
        a = RngStream(seed=7, stream_id=3, counter=1).generator().normal(size=5)
        b = RngStream(seed=7, stream_id=3, counter=1).generator().normal(size=5)
        np.testing.assert_array_equal(a, b)

    def test_keys_are_independent(self):
        base = RngStream(seed=7, stream_id=3)
        draws = [
            base.generator().normal(size=5),
            base.advance().generator().normal(size=5),
            RngStream(seed=7, stream_id=4).generator().normal(size=5),
            RngStream(seed=8, stream_id=3).generator().normal(size=5),
        ]
        for i in range(len(draws)):
            for j in range(i + 1, len(draws)):
                self.assertFalse(np.array_equal(draws[i], draws[j]))

    def test_advance_and_substream(self):
        stream = RngStream(seed=1, stream_id=2)
        self.assertEqual(stream.advance().counter, 1)
        self.assertEqual(stream.advance(3).counter, 3)
        self.assertEqual(stream.substream(Substream.NOISE_NEW).counter, 3)
        self.assertEqual(trial_stream(1, 2, Substream.CHANNEL), stream.advance())


class TestSampling(unittest.TestCase):
    def test_rayleigh_second_moments(self):
        cfg = _config()
        h = sample_rayleigh(cfg, RngStream(seed=11, stream_id=0))
        sigma_f_sq = 10 ** (3.0 / 10)

        self.assertEqual(h.data.shape, (1, 50_000, 2))
        self.assertAlmostEqual(h.sigma_f_sq_linear, sigma_f_sq)
        self.assertAlmostEqual(np.mean(np.abs(h.data) ** 2), sigma_f_sq, delta=0.02 * sigma_f_sq)
        self.assertAlmostEqual(np.var(h.data.real), sigma_f_sq / 2, delta=0.03 * sigma_f_sq / 2)
        self.assertAlmostEqual(np.var(h.data.imag), sigma_f_sq / 2, delta=0.03 * sigma_f_sq / 2)
        self.assertAlmostEqual(np.mean(h.data.real), 0.0, delta=0.02)

    def test_awgn_component_variance(self):
        cfg = _config(n_subcarriers=100_000)
        w = sample_awgn(cfg, RngStream(seed=11, stream_id=0, counter=2))

        self.assertEqual(w.shape, (1, 100_000))
        self.assertAlmostEqual(np.var(w.data.real), 0.25, delta=0.02 * 0.25)
        self.assertAlmostEqual(np.var(w.data.imag), 0.25, delta=0.02 * 0.25)

    def test_noiseless_awgn_is_zero(self):
        cfg = _config(n_subcarriers=8, sigma_e_sq=0.0)
        w = sample_awgn(cfg, RngStream(seed=0, stream_id=0))
        self.assertFalse(np.any(w.data))

    def test_draws_are_deterministic(self):
        cfg = _config(n_subcarriers=16)
        a = sample_rayleigh(cfg, RngStream(seed=5, stream_id=9, counter=1))
        b = sample_rayleigh(cfg, RngStream(seed=5, stream_id=9, counter=1))
        np.testing.assert_array_equal(a.data, b.data)


class TestFadedUplink(unittest.TestCase):
    def setUp(self):
        # L=1, K=2, N=2
        self.h = ChannelTensor(
            data=[[[2 + 0j, 1j], [1 - 1j, 0.5]]],
            sigma_f_sq_linear=1.0,
        )
        self.s = np.array([[[1 + 1j, 2]], [[1, -2j]]])

    def test_faded_superposition(self):
        y_dot = faded_superposition(self.s, self.h)
        expected = [[2 * (1 + 1j) + 1j * 1, (1 - 1j) * 2 + 0.5 * (-2j)]]
        np.testing.assert_allclose(y_dot, expected)

    def test_noise_is_added(self):
        w_new = NoiseBlock(data=[[0.1, 0.2j]])
        y_c = apply_faded_uplink(transmit_blocks(self.s), self.h, w_new)
        np.testing.assert_allclose(y_c.data, faded_superposition(self.s, self.h) + w_new.data)
        self.assertEqual(y_c.stage, ReceivedStage.FADED)

    def test_linear_in_signals_and_noise(self):
        rng = np.random.default_rng(12)
        shape = (2, 1, 2)
        s_a, s_b = (rng.normal(size=shape) + 1j * rng.normal(size=shape) for _ in range(2))
        w_a, w_b = (
            NoiseBlock(data=rng.normal(size=(1, 2)) + 1j * rng.normal(size=(1, 2)))
            for _ in range(2)
        )
        a, b = 0.7, -2.5 + 1j

        def uplink(s, w):
            return apply_faded_uplink(transmit_blocks(s), self.h, w).data

        combined = uplink(a * s_a + b * s_b, NoiseBlock(data=a * w_a.data + b * w_b.data))
        np.testing.assert_allclose(
            combined, a * uplink(s_a, w_a) + b * uplink(s_b, w_b), rtol=0, atol=1e-12
        )
        zero = NoiseBlock(data=np.zeros((1, 2)))
        np.testing.assert_allclose(
            uplink(s_a, w_a) - uplink(s_a, zero), w_a.data, rtol=0, atol=1e-12
        )

    def test_user_count_mismatch(self):
        with self.assertRaises(ShapeMismatch):
            apply_faded_uplink(transmit_blocks(self.s[:1]), self.h, NoiseBlock(data=[[0, 0]]))

    def test_noise_shape_mismatch(self):
        with self.assertRaises(ShapeMismatch):
            apply_faded_uplink(transmit_blocks(self.s), self.h, NoiseBlock(data=[[0, 0, 0]]))
