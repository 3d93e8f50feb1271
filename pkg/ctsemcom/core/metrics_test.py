import unittest

import numpy as np

from ctsemcom.core.exceptions import ShapeMismatch
from ctsemcom.core.metrics import (
    d1_empirical,
    d2_analytic,
    noise_floor,
    power_violation,
    square_terms,
)
from ctsemcom.domains.signals import ChannelTensor, ReceivedBlock, ReceivedStage


def _received(data, stage=ReceivedStage.AWGN) -> ReceivedBlock:
    return ReceivedBlock(data=data, stage=stage)


class TestD1(unittest.TestCase):
    def test_identical_blocks(self):
        y = _received([[1 + 2j, -3j]])
        self.assertEqual(d1_empirical(y, y), 0.0)

    def test_single_entry(self):
        y = _received([[1 + 1j, 2]])
        y_new = _received([[4 + 5j, 2]], ReceivedStage.EQUALIZED)
        self.assertAlmostEqual(d1_empirical(y_new, y), 25.0)

    def test_symmetric(self):
        rng = np.random.default_rng(0)
        a = _received(rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3)))
        b = _received(rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3)))
        self.assertAlmostEqual(d1_empirical(a, b), d1_empirical(b, a))
        self.assertGreater(d1_empirical(a, b), 0)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeMismatch):
            d1_empirical(_received([[1, 2]]), _received([[1, 2, 3]]))


class TestD2(unittest.TestCase):
    def setUp(self):
        self.h_one = ChannelTensor(data=[[[1 + 0j]]], sigma_f_sq_linear=1.0)
        self.t = np.array([[[0.6 + 0.8j]]])

    def test_noise_term_only(self):
        self.assertAlmostEqual(d2_analytic(self.t, self.t, self.h_one, 1.0, 0.1), 0.4)

    def test_zero_allocation_without_noise(self):
        t = np.array([[[1 + 1j, 0.5]], [[-1j, 0.5j]]])
        h = ChannelTensor(data=np.ones((1, 2, 2)), sigma_f_sq_linear=1.0)
        expected = np.sum(np.abs(np.sum(t, axis=0)) ** 2)
        self.assertAlmostEqual(d2_analytic(np.zeros_like(t), t, h, 0.7, 0.0), expected)

    def test_square_terms(self):
        h = ChannelTensor(data=[[[2 + 0j]]], sigma_f_sq_linear=1.0)
        # α·h·s − t = 1·2·0.6 − 0.6 = 0.6 on the real axis
        s = np.array([[[0.6 + 0j]]])
        t = np.array([[[0.6 + 0j]]])
        self.assertAlmostEqual(square_terms(s, t, h, 1.0), 0.36)

    def test_noise_floor(self):
        self.assertAlmostEqual(noise_floor(8, 64, 0.5, 0.25), 2 * 8 * 64 * 1.25 * 0.25)
        self.assertEqual(noise_floor(8, 64, 0.5, 0.0), 0.0)


class TestPowerViolation(unittest.TestCase):
    def test_feasible(self):
        self.assertEqual(power_violation(np.array([[0.5, 1.0], [0.1, 0.2]]), [1.0, 0.2]), 0.0)

    def test_relative_excess(self):
        violation = power_violation(np.array([[0.5, 1.0], [0.1, 0.3]]), [1.0, 0.2])
        self.assertAlmostEqual(violation, 0.5)
