import time
import unittest

import numpy as np

from ctsemcom.core.exceptions import DegenerateChannel, NonFiniteCandidate, NonPositivePower
from ctsemcom.core.metrics import d2_analytic, noise_floor
from ctsemcom.core.ssdt import (
    compute_alpha_candidates,
    compute_beta,
    compute_effective_components,
    compute_multipliers,
    derive_power_factors,
    select_alpha,
    solve_p3_kkt_system,
    ssdt_allocate,
    zero_forcing_residual,
)
from ctsemcom.domains.signals import ChannelTensor, TransmitBlock, stack_blocks, transmit_blocks
from ctsemcom.domains.system import PowerConvention, SystemConfig
from ctsemcom.services.trials import draw_instance


def _scalar(h: complex) -> tuple[list[TransmitBlock], ChannelTensor]:
    t_all = [TransmitBlock(user=0, data=[[0.6 + 0.8j]])]
    return t_all, ChannelTensor(data=[[[h]]], sigma_f_sq_linear=1.0)


def _config(n_users=2, n_symbols=8, n_subcarriers=64, **overrides) -> SystemConfig:
    values = dict(
        n_users=n_users,
        n_symbols=n_symbols,
        n_subcarriers=n_subcarriers,
        power_budget=[0.8, 0.2, 0.2][:n_users] if n_users <= 3 else [1.0] * n_users,
        sigma_e_sq=0.8 * 10**-0.5,
        sigma_f_db=3.0,
    )
    values.update(overrides)
    return SystemConfig(**values)


SCALAR_CONFIG = SystemConfig(
    n_users=1, n_symbols=1, n_subcarriers=1, power_budget=[1.0], sigma_e_sq=0.1, sigma_f_db=0.0
)


class TestBeta(unittest.TestCase):
    def test_inverse_square_root(self):
        self.assertEqual(compute_beta([1.0]), [1.0])
        self.assertEqual(compute_beta([4.0]), [0.5])
        np.testing.assert_allclose(
            compute_beta([0.8, 0.2, 0.2]), [1.1180, 2.2361, 2.2361], atol=1e-4
        )

    def test_non_positive_budget(self):
        with self.assertRaises(NonPositivePower):
            compute_beta([0.8, 0.0])


class TestMultipliers(unittest.TestCase):
    def test_scalar_example(self):
        t_all, h = _scalar(1 + 0j)
        multipliers = compute_multipliers(t_all, h, [1.0], 1.0)
        self.assertAlmostEqual(multipliers.lambda_[0, 0], -1.2)
        self.assertAlmostEqual(multipliers.mu[0, 0], -1.6)
        self.assertEqual(multipliers.fade_floor_hits, 0)

    def test_imaginary_features_give_zero_lambda(self):
        t_all = [TransmitBlock(user=0, data=[[0.5j, -1j]])]
        h = ChannelTensor(data=[[[1 + 1j], [0.3 - 2j]]], sigma_f_sq_linear=1.0)
        multipliers = compute_multipliers(t_all, h, [1.0], 0.7)
        np.testing.assert_array_equal(multipliers.lambda_, 0)

    def test_doubling_alpha_quarters_multipliers(self):
        cfg = _config(n_symbols=2, n_subcarriers=4)
        t_all, h = draw_instance(cfg, seed=1, stream_id=0)
        once = compute_multipliers(t_all, h, compute_beta(cfg.power_budget), 0.3)
        twice = compute_multipliers(t_all, h, compute_beta(cfg.power_budget), 0.6)
        np.testing.assert_allclose(twice.lambda_, once.lambda_ / 4, rtol=1e-12)
        np.testing.assert_allclose(twice.mu, once.mu / 4, rtol=1e-12)

    def test_fade_floor(self):
        t_all = [TransmitBlock(user=0, data=[[1.0, 1j]])]
        h = ChannelTensor(data=[[[0j], [1 + 0j]]], sigma_f_sq_linear=1.0)

        floored = compute_multipliers(t_all, h, [1.0], 1.0, fade_floor_eps=1e-12)
        self.assertEqual(floored.fade_floor_hits, 1)
        self.assertTrue(np.all(np.isfinite(floored.lambda_)))

        with self.assertRaises(DegenerateChannel):
            compute_multipliers(t_all, h, [1.0], 1.0, fade_floor_eps=0.0)


class TestEffectiveComponents(unittest.TestCase):
    def test_identity_channel_passes_signal(self):
        t_all, h = _scalar(1 + 0j)
        result = ssdt_allocate(t_all, h, SCALAR_CONFIG)
        self.assertAlmostEqual(result.alpha, 1.0)
        self.assertAlmostEqual(result.effective[0, 0, 0], 0.6 + 0.8j)

    def test_strong_channel_is_compensated_by_alpha(self):
        t_all, h = _scalar(2 + 0j)
        result = ssdt_allocate(t_all, h, SCALAR_CONFIG)

        self.assertAlmostEqual(result.alpha, 0.5)
        self.assertAlmostEqual(result.effective[0, 0, 0], 0.6 + 0.8j)
        received = h.data[0, 0, 0] * result.effective[0, 0, 0]
        self.assertAlmostEqual(received, 1.2 + 1.6j)
        self.assertAlmostEqual(result.alpha * received, 0.6 + 0.8j)

    def test_closed_form_from_multipliers(self):
        cfg = _config(n_symbols=2, n_subcarriers=4)
        t_all, h = draw_instance(cfg, seed=2, stream_id=5)
        beta = compute_beta(cfg.power_budget)
        result = ssdt_allocate(t_all, h, cfg)

        effective = compute_effective_components(
            t_all, h, beta, result.alpha, result.lambda_, result.mu
        )
        np.testing.assert_allclose(effective, result.effective, rtol=1e-12)

        # s = conj(h)·A / (α D β)
        h_users = h.per_user()
        a = np.sum(stack_blocks(t_all), axis=0)
        d = np.sum(np.abs(h_users) ** 2 / np.asarray(beta)[:, None, None], axis=0)
        expected = np.conj(h_users) * a / (result.alpha * d * np.asarray(beta)[:, None, None])
        np.testing.assert_allclose(result.effective, expected, rtol=1e-10)

    def test_matches_kkt_oracle(self):
        cfg = _config(n_symbols=1, n_subcarriers=4)
        beta = compute_beta(cfg.power_budget)
        for stream_id in range(100):
            t_all, h = draw_instance(cfg, seed=42, stream_id=stream_id)
            result = ssdt_allocate(t_all, h, cfg)
            effective, lambda_, mu = solve_p3_kkt_system(t_all, h, beta, result.alpha)

            np.testing.assert_allclose(effective, result.effective, rtol=1e-6, atol=1e-9)
            np.testing.assert_allclose(lambda_, result.lambda_, rtol=1e-6, atol=1e-9)
            np.testing.assert_allclose(mu, result.mu, rtol=1e-6, atol=1e-9)

    def test_power_factors(self):
        t_all = [TransmitBlock(user=0, data=[[0.6, 0.8j]])]
        h = ChannelTensor(data=[[[1 + 0j], [1 + 0j]]], sigma_f_sq_linear=1.0)
        cfg = SCALAR_CONFIG.model_copy(
            update={"n_subcarriers": 2, "power_convention": PowerConvention.PER_SYMBOL_TOTAL}
        )
        result = ssdt_allocate(t_all, h, cfg)

        p_r, p_i = derive_power_factors(result, t_all)
        self.assertAlmostEqual(p_r[0, 0, 0], 1.0)
        self.assertAlmostEqual(p_i[0, 0, 1], 1.0)
        self.assertTrue(np.isnan(p_i[0, 0, 0]))
        self.assertTrue(np.isnan(p_r[0, 0, 1]))


class TestAlphaCandidates(unittest.TestCase):
    def test_scalar_examples(self):
        for gain, expected in [(1 + 0j, 1.0), (2 + 0j, 0.5)]:
            t_all, h = _scalar(gain)
            candidates = compute_alpha_candidates(
                t_all, h, [1.0], [1.0], PowerConvention.PER_SUBCARRIER_AVERAGE
            )
            self.assertEqual(candidates.shape, (1, 1))
            self.assertAlmostEqual(candidates[0, 0], expected)

    def test_channel_scaling(self):
        cfg = _config(n_symbols=3, n_subcarriers=8)
        t_all, h = draw_instance(cfg, seed=3, stream_id=0)
        beta = compute_beta(cfg.power_budget)
        convention = PowerConvention.PER_SUBCARRIER_AVERAGE
        base = compute_alpha_candidates(t_all, h, beta, cfg.power_budget, convention)
        scaled = compute_alpha_candidates(t_all, h.scaled(3.0), beta, cfg.power_budget, convention)
        np.testing.assert_allclose(scaled, base / 3.0, rtol=1e-12)

    def test_conventions_differ_by_sqrt_k(self):
        cfg = _config(n_symbols=2, n_subcarriers=16)
        t_all, h = draw_instance(cfg, seed=3, stream_id=1)
        beta = compute_beta(cfg.power_budget)
        average = compute_alpha_candidates(
            t_all, h, beta, cfg.power_budget, PowerConvention.PER_SUBCARRIER_AVERAGE
        )
        total = compute_alpha_candidates(
            t_all, h, beta, cfg.power_budget, PowerConvention.PER_SYMBOL_TOTAL
        )
        np.testing.assert_allclose(total, average * 4.0, rtol=1e-12)


class TestSelectAlpha(unittest.TestCase):
    def test_maximum(self):
        self.assertEqual(select_alpha(np.array([[1.0, 0.5]])), 1.0)
        self.assertEqual(select_alpha(np.full((2, 3), 0.7)), 0.7)
        self.assertEqual(select_alpha(np.array([[0.3], [0.9]])), 0.9)

    def test_invalid_candidates(self):
        for candidates in ([[np.nan, 1.0]], [[np.inf]], [[0.0, 1.0]], np.empty((0, 0))):
            with self.assertRaises(NonFiniteCandidate):
                select_alpha(np.asarray(candidates))


class TestSsdtAllocate(unittest.TestCase):
    def test_identity_channel(self):
        cfg = SystemConfig(
            n_users=1,
            n_symbols=2,
            n_subcarriers=4,
            power_budget=[0.5],
            sigma_e_sq=0.1,
            sigma_f_db=0.0,
            power_convention=PowerConvention.PER_SYMBOL_TOTAL,
        )
        t_all, _ = draw_instance(cfg, seed=0, stream_id=0)
        h = ChannelTensor(data=np.ones((2, 4, 1)), sigma_f_sq_linear=1.0)

        result = ssdt_allocate(t_all, h, cfg)
        self.assertAlmostEqual(result.alpha, 1.0)
        np.testing.assert_allclose(result.effective, stack_blocks(t_all), rtol=1e-12)

    def test_zero_forcing_feasibility_and_binding(self):
        cfg = _config()
        for stream_id in range(1000):
            t_all, h = draw_instance(cfg, seed=9, stream_id=stream_id)
            t = stack_blocks(t_all)
            result = ssdt_allocate(t_all, h, cfg)

            residual = zero_forcing_residual(result.effective, t, h, result.alpha)
            self.assertLessEqual(residual, 1e-9 * np.max(np.abs(np.sum(t, axis=0))))

            ratio = result.per_symbol_power / np.asarray(cfg.symbol_budgets())[:, None]
            self.assertLessEqual(np.max(ratio), 1 + 1e-9)
            self.assertAlmostEqual(np.max(ratio), 1.0, delta=1e-9)

    def test_noise_floor_identity(self):
        cfg = _config()
        t_all, h = draw_instance(cfg, seed=4, stream_id=0)
        result = ssdt_allocate(t_all, h, cfg)
        d2 = d2_analytic(result.effective, t_all, h, result.alpha, cfg.sigma_e_sq)
        floor = noise_floor(8, 64, result.alpha, cfg.sigma_e_sq)
        self.assertAlmostEqual(d2, floor, delta=1e-9 * floor)

    def test_alpha_ignores_noise(self):
        cfg = _config()
        t_all, h = draw_instance(cfg, seed=4, stream_id=1)
        quiet = ssdt_allocate(t_all, h, cfg.model_copy(update={"sigma_e_sq": 1e-6}))
        loud = ssdt_allocate(t_all, h, cfg.model_copy(update={"sigma_e_sq": 10.0}))
        self.assertEqual(quiet.alpha, loud.alpha)

    def test_channel_scaling_keeps_components(self):
        cfg = _config()
        t_all, h = draw_instance(cfg, seed=4, stream_id=2)
        base = ssdt_allocate(t_all, h, cfg)
        scaled = ssdt_allocate(t_all, h.scaled(0.4), cfg)

        self.assertAlmostEqual(scaled.alpha * 0.4, base.alpha, delta=1e-12 * base.alpha)
        np.testing.assert_allclose(scaled.effective, base.effective, rtol=1e-12, atol=1e-15)

    def test_depends_on_feature_sums_only(self):
        cfg = _config(n_symbols=2)
        t_all, h = draw_instance(cfg, seed=4, stream_id=3)
        t = stack_blocks(t_all)
        swapped = transmit_blocks(t[::-1].copy())

        base = ssdt_allocate(t_all, h, cfg)
        other = ssdt_allocate(swapped, h, cfg)
        self.assertAlmostEqual(other.alpha, base.alpha, delta=1e-12 * base.alpha)
        np.testing.assert_allclose(other.effective, base.effective, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(other.lambda_, base.lambda_, rtol=1e-12, atol=1e-15)

    def test_runtime_grows_with_subcarriers(self):
        def best_runtime(n_subcarriers: int) -> float:
            cfg = _config(n_subcarriers=n_subcarriers)
            t_all, h = draw_instance(cfg, seed=0, stream_id=0)
            timings = []
            for _ in range(15):
                started = time.perf_counter()
                ssdt_allocate(t_all, h, cfg)
                timings.append(time.perf_counter() - started)
            return min(timings)

        ratio = best_runtime(16_384) / best_runtime(8_192)
        self.assertGreaterEqual(ratio, 1.0)
        self.assertLessEqual(ratio, 3.0)

    def test_single_symbol_runtime(self):
        cfg = _config(n_symbols=1)
        t_all, h = draw_instance(cfg, seed=0, stream_id=0)
        timings = []
        for _ in range(51):
            started = time.perf_counter()
            ssdt_allocate(t_all, h, cfg)
            timings.append(time.perf_counter() - started)
        self.assertLess(float(np.median(timings)), 10e-3)
