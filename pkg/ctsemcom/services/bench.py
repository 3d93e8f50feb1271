import time

import numpy as np
from loguru import logger

from ctsemcom.core.metrics import d2_analytic
from ctsemcom.domains.allocation import IterativeSettings
from ctsemcom.domains.experiment import BenchRecord, BenchReport, Scheme
from ctsemcom.domains.signals import FeatureBlock, stack_blocks
from ctsemcom.domains.system import SystemConfig
from ctsemcom.services.trials import allocate, draw_instance


def run_bench(
    cfg: SystemConfig,
    schemes: list[Scheme],
    n_instances: int,
    seed: int,
    *,
    features: list[FeatureBlock] | None = None,
    iterative_settings: IterativeSettings | None = None,
) -> BenchReport:
    """Time every scheme's allocation on the same `n_instances` instances.

    Instance i uses stream id i, so all schemes see identical features and
    channels. `speedup` is the ratio of iterative to closed-form mean runtime
    when both schemes are benchmarked.
    """
    if n_instances < 1:
        raise ValueError("n_instances must be >= 1")

    runtimes: dict[Scheme, list[float]] = {scheme: [] for scheme in schemes}
    d2: dict[Scheme, list[float]] = {scheme: [] for scheme in schemes}
    alphas: dict[Scheme, list[float]] = {scheme: [] for scheme in schemes}

    for instance in range(n_instances):
        t_all, h = draw_instance(cfg, seed, instance, features)
        t = stack_blocks(t_all)
        for scheme in schemes:
            started = time.perf_counter()
            allocation = allocate(scheme, t_all, h, cfg, iterative_settings)
            runtimes[scheme].append(time.perf_counter() - started)
            d2[scheme].append(
                d2_analytic(allocation.effective, t, h, allocation.alpha, cfg.sigma_e_sq)
            )
            alphas[scheme].append(allocation.alpha)

    records = [
        BenchRecord(
            scheme=scheme,
            instances=n_instances,
            runtime_ms_mean=float(np.mean(runtimes[scheme]) * 1000),
            runtime_ms_min=float(np.min(runtimes[scheme]) * 1000),
            d2_mean=float(np.mean(d2[scheme])),
            alpha_mean=float(np.mean(alphas[scheme])),
        )
        for scheme in schemes
    ]

    speedup = None
    by_scheme = {record.scheme: record for record in records}
    if Scheme.SSDT in by_scheme and Scheme.ITERATIVE in by_scheme:
        ssdt_ms = max(by_scheme[Scheme.SSDT].runtime_ms_mean, np.finfo(float).tiny)
        speedup = by_scheme[Scheme.ITERATIVE].runtime_ms_mean / ssdt_ms
        logger.info(f"iterative / closed-form runtime ratio: {speedup:.1f}")

    return BenchReport(records=records, speedup=speedup)
