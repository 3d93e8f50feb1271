"""Invariant suite run on fresh random instances by `ctsemcom verify`."""

import tempfile
from collections.abc import Callable
from pathlib import Path
from typing import NamedTuple

import numpy as np
from loguru import logger

from ctsemcom.core.channel import apply_faded_uplink, faded_superposition, sample_awgn
from ctsemcom.core.features import gen_gaussian_features
from ctsemcom.core.iterative import iterative_allocate
from ctsemcom.core.metrics import d1_empirical, d2_analytic, noise_floor, power_violation
from ctsemcom.core.rng import RngStream, Substream, trial_stream
from ctsemcom.core.signal_model import equalize, superpose_awgn
from ctsemcom.core.ssdt import solve_p3_kkt_system, ssdt_allocate, zero_forcing_residual
from ctsemcom.domains.allocation import AllocationResult, IterativeSettings, IterativeTrace
from ctsemcom.domains.experiment import CheckOutcome
from ctsemcom.domains.signals import (
    ChannelTensor,
    FeatureBlock,
    TransmitBlock,
    transmit_blocks,
)
from ctsemcom.domains.system import SystemConfig
from ctsemcom.services.trials import draw_instance
from ctsemcom.utils.feature_file import read_features, write_features

RELATIVE_TOL = 1e-9
ORACLE_TOL = 1e-6
COVARIANCE_TOL = 1e-12
ITERATIVE_ORDER_TOL = 1e-6
CHANNEL_SCALE = 2.5


class Instance(NamedTuple):
    index: int
    t_all: list[TransmitBlock]
    t: np.ndarray
    h: ChannelTensor
    ssdt: AllocationResult
    iterative: AllocationResult | None
    trace: IterativeTrace | None


class Verdict(NamedTuple):
    passed: bool
    detail: str


InstanceCheck = Callable[[SystemConfig, Instance, int], Verdict]


def _max_abs(values: np.ndarray) -> float:
    return float(max(np.max(np.abs(values.real)), np.max(np.abs(values.imag))))


def _relative_gap(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(_max_abs(np.asarray(b, dtype=complex)), np.finfo(float).tiny)
    return _max_abs(np.asarray(a, dtype=complex) - b) / scale


def check_zero_forcing(cfg: SystemConfig, instance: Instance, seed: int) -> Verdict:
    if instance.ssdt.fade_floor_hits:
        return Verdict(True, f"skipped, {instance.ssdt.fade_floor_hits} fade floor hit(s)")
    residual = zero_forcing_residual(
        instance.ssdt.effective, instance.t, instance.h, instance.ssdt.alpha
    )
    scale = _max_abs(np.sum(instance.t, axis=0))
    return Verdict(residual <= RELATIVE_TOL * scale, f"residual {residual:.3e}, scale {scale:.3e}")


def check_power_binding(cfg: SystemConfig, instance: Instance, seed: int) -> Verdict:
    ratio = instance.ssdt.per_symbol_power / np.asarray(cfg.symbol_budgets())[:, None]
    peak = float(np.max(ratio))
    feasible = peak <= 1 + RELATIVE_TOL
    binding = abs(peak - 1) <= RELATIVE_TOL or instance.ssdt.fade_floor_hits > 0
    return Verdict(feasible and binding, f"max power/budget {peak:.12f}")


def check_noise_floor(cfg: SystemConfig, instance: Instance, seed: int) -> Verdict:
    alpha = instance.ssdt.alpha
    d2 = d2_analytic(instance.ssdt.effective, instance.t, instance.h, alpha, cfg.sigma_e_sq)
    floor = noise_floor(cfg.n_symbols, cfg.n_subcarriers, alpha, cfg.sigma_e_sq)
    reference = max(floor, float(np.sum(np.abs(np.sum(instance.t, axis=0)) ** 2)))
    return Verdict(abs(d2 - floor) <= RELATIVE_TOL * reference, f"d2 {d2:.12g}, floor {floor:.12g}")


def check_kkt_oracle(cfg: SystemConfig, instance: Instance, seed: int) -> Verdict:
    """The closed form against a dense solve of the sum-power stationarity system."""
    result = instance.ssdt
    effective, lambda_, mu = solve_p3_kkt_system(
        instance.t_all, instance.h, result.beta, result.alpha
    )
    gaps = (
        _relative_gap(effective, result.effective),
        _relative_gap(lambda_, result.lambda_),
        _relative_gap(mu, result.mu),
    )
    return Verdict(max(gaps) <= ORACLE_TOL, f"relative gaps s/λ/μ {gaps[0]:.2e}/{gaps[1]:.2e}/{gaps[2]:.2e}")


def check_alpha_noise_independence(cfg: SystemConfig, instance: Instance, seed: int) -> Verdict:
    noisier = cfg.model_copy(update={"sigma_e_sq": 4 * cfg.sigma_e_sq + 1})
    alpha = ssdt_allocate(instance.t_all, instance.h, noisier).alpha
    return Verdict(alpha == instance.ssdt.alpha, f"α {instance.ssdt.alpha:.15g} vs {alpha:.15g}")


def check_channel_scaling(cfg: SystemConfig, instance: Instance, seed: int) -> Verdict:
    scaled = ssdt_allocate(instance.t_all, instance.h.scaled(CHANNEL_SCALE), cfg)
    alpha_gap = abs(scaled.alpha * CHANNEL_SCALE - instance.ssdt.alpha) / instance.ssdt.alpha
    s_gap = _relative_gap(scaled.effective, instance.ssdt.effective)
    return Verdict(
        max(alpha_gap, s_gap) <= COVARIANCE_TOL, f"α gap {alpha_gap:.2e}, s gap {s_gap:.2e}"
    )


def check_sum_dependence(cfg: SystemConfig, instance: Instance, seed: int) -> Verdict:
    if cfg.n_users < 2:
        return Verdict(True, "skipped, single user")
    # shift half of user 1's signal onto user 0; per-(l,k) sums are unchanged
    shifted = np.array(instance.t)
    shifted[0] += 0.5 * instance.t[1]
    shifted[1] -= 0.5 * instance.t[1]
    result = ssdt_allocate(transmit_blocks(shifted), instance.h, cfg)
    gap = _relative_gap(result.effective, instance.ssdt.effective)
    return Verdict(gap <= COVARIANCE_TOL, f"s gap {gap:.2e}")


def check_iterative_ordering(cfg: SystemConfig, instance: Instance, seed: int) -> Verdict:
    ssdt, iterative = instance.ssdt, instance.iterative
    d2_ssdt = d2_analytic(ssdt.effective, instance.t, instance.h, ssdt.alpha, cfg.sigma_e_sq)
    d2_iter = d2_analytic(
        iterative.effective, instance.t, instance.h, iterative.alpha, cfg.sigma_e_sq
    )
    ordered = d2_iter <= d2_ssdt * (1 + ITERATIVE_ORDER_TOL)
    if cfg.sigma_e_sq > 0:
        ordered = ordered and iterative.alpha <= ssdt.alpha * (1 + RELATIVE_TOL)
    violation = power_violation(iterative.per_symbol_power, cfg.symbol_budgets())
    return Verdict(
        ordered and violation <= RELATIVE_TOL,
        f"d2 {d2_iter:.10g} vs {d2_ssdt:.10g}, α {iterative.alpha:.6g} vs {ssdt.alpha:.6g}",
    )


def check_trace_monotone(cfg: SystemConfig, instance: Instance, seed: int) -> Verdict:
    d2 = instance.trace.d2_sequence()
    rises = [
        later - earlier
        for earlier, later in zip(d2, d2[1:])
        if later > earlier + RELATIVE_TOL * max(1.0, earlier)
    ]
    return Verdict(not rises, f"{len(d2)} outer iteration(s), {len(rises)} increase(s)")


def check_noise_only_distortion(cfg: SystemConfig, instance: Instance, seed: int) -> Verdict:
    """After zero-forcing, d1 is exactly Σ|α·W^new − W|²."""
    w = sample_awgn(cfg, trial_stream(seed, instance.index, Substream.NOISE))
    w_new = sample_awgn(cfg, trial_stream(seed, instance.index, Substream.NOISE_NEW))
    y = superpose_awgn(instance.t_all, w)
    y_c = apply_faded_uplink(transmit_blocks(instance.ssdt.effective), instance.h, w_new)
    d1 = d1_empirical(equalize(y_c, instance.ssdt.alpha), y)

    expected = float(np.sum(np.abs(instance.ssdt.alpha * w_new.data - w.data) ** 2))
    transmitted = float(np.sum(np.abs(faded_superposition(instance.t, instance.h)) ** 2))
    tolerance = RELATIVE_TOL * max(expected, transmitted)
    return Verdict(abs(d1 - expected) <= tolerance, f"d1 {d1:.10g} vs {expected:.10g}")


SSDT_CHECKS: dict[str, InstanceCheck] = {
    "ssdt_zero_forcing": check_zero_forcing,
    "ssdt_power_binding": check_power_binding,
    "ssdt_noise_floor": check_noise_floor,
    "ssdt_kkt_oracle": check_kkt_oracle,
    "ssdt_alpha_noise_independence": check_alpha_noise_independence,
    "ssdt_channel_scaling": check_channel_scaling,
    "ssdt_sum_dependence": check_sum_dependence,
    "noise_only_distortion": check_noise_only_distortion,
}

ITERATIVE_CHECKS: dict[str, InstanceCheck] = {
    "iterative_not_worse_than_ssdt": check_iterative_ordering,
    "iterative_trace_monotone": check_trace_monotone,
}


def check_feature_file_roundtrip(cfg: SystemConfig, seed: int) -> CheckOutcome:
    features = gen_gaussian_features(cfg, RngStream(seed=seed, stream_id=0))
    # the file stores float32, so start from float32-representable values
    exact = [
        FeatureBlock(user=block.user, data=block.data.astype(np.complex64)) for block in features
    ]
    with tempfile.TemporaryDirectory() as directory:
        path = Path(directory) / "features.ctsf"
        write_features(exact, path)
        loaded = read_features(path)

    passed = len(loaded) == len(exact) and all(
        np.array_equal(a.data, b.data) for a, b in zip(loaded, exact)
    )
    return CheckOutcome(
        name="feature_file_roundtrip", passed=passed, detail=f"{len(exact)} block(s)"
    )


def _build_instance(
    cfg: SystemConfig,
    seed: int,
    index: int,
    features: list[FeatureBlock] | None,
    iterative_settings: IterativeSettings | None,
    include_iterative: bool,
) -> Instance:
    t_all, h = draw_instance(cfg, seed, index, features)
    ssdt = ssdt_allocate(t_all, h, cfg)
    iterative, trace = (
        iterative_allocate(t_all, h, cfg, iterative_settings)
        if include_iterative
        else (None, None)
    )
    return Instance(
        index=index,
        t_all=t_all,
        t=np.stack([block.data for block in t_all]),
        h=h,
        ssdt=ssdt,
        iterative=iterative,
        trace=trace,
    )


def run_verify(
    cfg: SystemConfig,
    n_instances: int,
    seed: int,
    *,
    features: list[FeatureBlock] | None = None,
    iterative_settings: IterativeSettings | None = None,
    include_iterative: bool = True,
) -> list[CheckOutcome]:
    """Run the invariant suite; a check passes only if it holds on every instance."""
    if n_instances < 1:
        raise ValueError("n_instances must be >= 1")

    checks = dict(SSDT_CHECKS)
    if include_iterative:
        checks.update(ITERATIVE_CHECKS)
    failures: dict[str, list[str]] = {name: [] for name in checks}
    last_detail: dict[str, str] = {}

    for index in range(n_instances):
        instance = _build_instance(
            cfg, seed, index, features, iterative_settings, include_iterative
        )
        for name, check in checks.items():
            verdict = check(cfg, instance, seed)
            last_detail[name] = verdict.detail
            if not verdict.passed:
                failures[name].append(f"instance {index}: {verdict.detail}")
                logger.warning(f"{name} failed on instance {index}: {verdict.detail}")
        logger.debug(f"verified instance {index}")

    outcomes = [
        CheckOutcome(
            name=name,
            passed=not failures[name],
            detail="; ".join(failures[name]) or f"{n_instances} instance(s), last: {last_detail[name]}",
        )
        for name in checks
    ]
    outcomes.append(check_feature_file_roundtrip(cfg, seed))
    return outcomes
