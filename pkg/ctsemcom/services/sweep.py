import numpy as np
from loguru import logger

from ctsemcom.domains.experiment import (
    Scheme,
    SchemeSummary,
    SweepAxis,
    SweepResult,
    TrialReport,
)
from ctsemcom.domains.run_config import RunConfig
from ctsemcom.domains.signals import FeatureBlock
from ctsemcom.services.trials import run_trials


def _mean_and_se(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(values))
    if values.size < 2:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / np.sqrt(values.size))


def summarize_reports(
    scheme: Scheme, axis_value: float, reports: list[TrialReport]
) -> SchemeSummary:
    """Mean and standard error (sample variance) of one scheme's trials."""

    def column(name: str) -> np.ndarray:
        return np.array([getattr(report, name) for report in reports])

    d2_mean, d2_se = _mean_and_se(column("d2_analytic"))
    d1_mean, d1_se = _mean_and_se(column("d1_empirical"))
    return SchemeSummary(
        scheme=scheme,
        axis_value=axis_value,
        alpha_mean=float(np.mean(column("alpha"))),
        d2_mean=d2_mean,
        d2_se=d2_se,
        d1_mean=d1_mean,
        d1_se=d1_se,
        noise_floor_mean=float(np.mean(column("noise_floor"))),
        zf_residual_max=float(np.max(column("zf_residual_max"))),
        power_violation_max=float(np.max(column("power_violation_max"))),
        runtime_ms_mean=float(np.mean(column("runtime_seconds")) * 1000),
        fade_floor_hits=int(np.sum(column("fade_floor_hits"))),
        trials=len(reports),
    )


def aggregate_sweep(
    points: list[float],
    template: RunConfig,
    schemes: list[Scheme],
    n_trials: int,
    seed: int,
    *,
    axis: SweepAxis = "snr1_db",
    common_random_numbers: bool = False,
    features: list[FeatureBlock] | None = None,
    workers: int | None = None,
) -> SweepResult:
    """Run every scheme at every point of one sweep axis.

    Point i draws its trials from stream ids [i·n_trials, (i+1)·n_trials), or
    from [0, n_trials) at every point when `common_random_numbers` is set.
    Schemes evaluated at the same point always see the same instances.
    """
    if not points:
        raise ValueError("a sweep needs at least one point")
    if not schemes:
        raise ValueError("a sweep needs at least one scheme")

    summaries: list[SchemeSummary] = []
    for index, value in enumerate(points):
        point_config = template.at_point(axis, value)
        cfg = point_config.to_system_config()
        offset = 0 if common_random_numbers else index * n_trials
        logger.info(f"sweep point {axis}={value} ({index + 1}/{len(points)})")

        for scheme in schemes:
            reports = run_trials(
                cfg,
                scheme,
                n_trials,
                seed,
                features=features,
                stream_offset=offset,
                iterative_settings=point_config.iterative_settings(),
                workers=workers,
            )
            summaries.append(summarize_reports(scheme, value, reports))

    return SweepResult(
        axis_name=axis, axis_values=list(points), seed=seed, trials=n_trials, points=summaries
    )


def sweep_points(start: float, stop: float, step: float) -> list[float]:
    """Inclusive grid start, start+step, … up to stop."""
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    if stop < start:
        raise ValueError(f"empty range [{start}, {stop}]")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [float(np.round(start + i * step, 12)) for i in range(count)]
