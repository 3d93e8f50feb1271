import multiprocessing as mp
import time
from typing import NamedTuple

import numpy as np
from loguru import logger

from ctsemcom.config.settings import settings
from ctsemcom.core.channel import apply_faded_uplink, sample_awgn, sample_rayleigh
from ctsemcom.core.features import gen_gaussian_features
from ctsemcom.core.iterative import iterative_allocate
from ctsemcom.core.metrics import d1_empirical, d2_analytic, noise_floor, power_violation
from ctsemcom.core.rng import Substream, trial_stream
from ctsemcom.core.signal_model import equalize, normalize_features, superpose_awgn
from ctsemcom.core.ssdt import ssdt_allocate, zero_forcing_residual
from ctsemcom.core.exceptions import ShapeMismatch
from ctsemcom.domains.allocation import AllocationResult, IterativeSettings
from ctsemcom.domains.experiment import Scheme, TrialReport
from ctsemcom.domains.signals import (
    ChannelTensor,
    FeatureBlock,
    TransmitBlock,
    stack_blocks,
    transmit_blocks,
)
from ctsemcom.domains.system import SystemConfig


class TrialInstance(NamedTuple):
    """Everything a scheme sees for one trial, drawn from the trial's streams."""

    t_all: list[TransmitBlock]
    h: ChannelTensor


def _check_features(cfg: SystemConfig, features: list[FeatureBlock]) -> None:
    if len(features) != cfg.n_users:
        raise ShapeMismatch(details=f"{len(features)} feature blocks for {cfg.n_users} users")
    for block in features:
        if block.shape != cfg.shape:
            raise ShapeMismatch(details=f"user {block.user}: {block.shape} vs {cfg.shape}")


def draw_instance(
    cfg: SystemConfig,
    seed: int,
    stream_id: int,
    features: list[FeatureBlock] | None = None,
) -> TrialInstance:
    if features is None:
        features = gen_gaussian_features(
            cfg, trial_stream(seed, stream_id, Substream.FEATURES)
        )
    t_all = [
        normalize_features(x, cfg.power_budget[n]) for n, x in enumerate(features)
    ]
    h = sample_rayleigh(cfg, trial_stream(seed, stream_id, Substream.CHANNEL))
    return TrialInstance(t_all=t_all, h=h)


def allocate(
    scheme: Scheme,
    t_all: list[TransmitBlock],
    h: ChannelTensor,
    cfg: SystemConfig,
    iterative_settings: IterativeSettings | None = None,
) -> AllocationResult:
    if scheme == Scheme.SSDT:
        return ssdt_allocate(t_all, h, cfg)
    if scheme == Scheme.ITERATIVE:
        result, _ = iterative_allocate(t_all, h, cfg, iterative_settings)
        return result

    t = stack_blocks(t_all)
    return AllocationResult(
        effective=t,
        alpha=1.0,
        per_symbol_power=np.sum(np.abs(t) ** 2, axis=2),
    )


def run_single_trial(
    cfg: SystemConfig,
    scheme: Scheme,
    seed: int,
    stream_id: int,
    features: list[FeatureBlock] | None = None,
    iterative_settings: IterativeSettings | None = None,
) -> TrialReport:
    t_all, h = draw_instance(cfg, seed, stream_id, features)
    w = sample_awgn(cfg, trial_stream(seed, stream_id, Substream.NOISE))
    w_new = sample_awgn(cfg, trial_stream(seed, stream_id, Substream.NOISE_NEW))
    y = superpose_awgn(t_all, w)

    started = time.perf_counter()
    allocation = allocate(scheme, t_all, h, cfg, iterative_settings)
    runtime = time.perf_counter() - started

    y_c = apply_faded_uplink(transmit_blocks(allocation.effective), h, w_new)
    y_new = equalize(y_c, allocation.alpha)

    t = stack_blocks(t_all)
    return TrialReport(
        trial=stream_id,
        scheme=scheme,
        alpha=allocation.alpha,
        d2_analytic=d2_analytic(allocation.effective, t, h, allocation.alpha, cfg.sigma_e_sq),
        d1_empirical=d1_empirical(y_new, y),
        noise_floor=noise_floor(
            cfg.n_symbols, cfg.n_subcarriers, allocation.alpha, cfg.sigma_e_sq
        ),
        zf_residual_max=zero_forcing_residual(allocation.effective, t, h, allocation.alpha),
        power_violation_max=power_violation(
            allocation.per_symbol_power, cfg.symbol_budgets()
        ),
        runtime_seconds=runtime,
        fade_floor_hits=allocation.fade_floor_hits,
    )


def _run_trial_range(
    cfg: SystemConfig,
    scheme: Scheme,
    seed: int,
    stream_ids: list[int],
    features: list[FeatureBlock] | None,
    iterative_settings: IterativeSettings | None,
) -> list[TrialReport]:
    reports = []
    for stream_id in stream_ids:
        reports.append(
            run_single_trial(cfg, scheme, seed, stream_id, features, iterative_settings)
        )
        logger.debug(f"{scheme} trial {stream_id} done")
    return reports


def run_trials(
    cfg: SystemConfig,
    scheme: Scheme,
    n_trials: int,
    seed: int,
    *,
    features: list[FeatureBlock] | None = None,
    stream_offset: int = 0,
    iterative_settings: IterativeSettings | None = None,
    workers: int | None = None,
) -> list[TrialReport]:
    """Run `n_trials` seeded trials; trial i draws from stream id `stream_offset + i`.

    Reports come back ordered by trial index whatever the number of workers.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if features is not None:
        _check_features(cfg, features)

    stream_ids = list(range(stream_offset, stream_offset + n_trials))
    workers = min(workers or settings.WORKERS, n_trials)
    logger.info(
        f"running {n_trials} {scheme} trial(s) from stream {stream_offset} on {workers} worker(s)"
    )

    if workers <= 1:
        return _run_trial_range(cfg, scheme, seed, stream_ids, features, iterative_settings)

    chunks = [chunk.tolist() for chunk in np.array_split(stream_ids, workers)]
    args = [(cfg, scheme, seed, chunk, features, iterative_settings) for chunk in chunks]
    ctx = mp.get_context("spawn")
    with ctx.Pool(processes=workers) as pool:
        results = pool.starmap(_run_trial_range, args)
    return [report for chunk_reports in results for report in chunk_reports]
