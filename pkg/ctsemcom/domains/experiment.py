from enum import StrEnum
from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, model_validator

SweepAxis = Literal["snr1_db", "sigma_f_db", "n_users"]
SWEEP_AXES: tuple[SweepAxis, ...] = ("snr1_db", "sigma_f_db", "n_users")


class Scheme(StrEnum):
    SSDT = "ssdt"
    ITERATIVE = "iterative"
    # features sent unadapted through the fading channel (s = t, α = 1)
    NO_TRANSFER = "no_transfer"


class TrialReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    trial: int
    scheme: Scheme
    alpha: NonNegativeFloat
    d2_analytic: NonNegativeFloat
    d1_empirical: NonNegativeFloat
    noise_floor: NonNegativeFloat
    zf_residual_max: NonNegativeFloat
    power_violation_max: NonNegativeFloat
    runtime_seconds: NonNegativeFloat
    fade_floor_hits: Annotated[int, Field(ge=0)] = 0

    @model_validator(mode="after")
    def validate_noise_floor(self):
        if self.d2_analytic < self.noise_floor - 1e-9 * max(1.0, self.noise_floor):
            raise ValueError(
                f"d2 {self.d2_analytic} lies below its noise floor {self.noise_floor}"
            )
        return self


class SchemeSummary(BaseModel):
    """Aggregated statistics of one scheme at one sweep point."""

    scheme: Scheme
    axis_value: float
    alpha_mean: float
    d2_mean: float
    d2_se: float
    d1_mean: float
    d1_se: float
    noise_floor_mean: float
    zf_residual_max: float
    power_violation_max: float
    runtime_ms_mean: float
    fade_floor_hits: int
    trials: int


class SweepResult(BaseModel):
    axis_name: SweepAxis
    axis_values: list[float]
    seed: int
    trials: int
    points: list[SchemeSummary] = []

    @model_validator(mode="after")
    def validate_trial_counts(self):
        if any(point.trials != self.trials for point in self.points):
            raise ValueError("every sweep point must hold the same trial count")
        return self


class BenchRecord(BaseModel):
    scheme: Scheme
    instances: int
    runtime_ms_mean: float
    runtime_ms_min: float
    d2_mean: float
    alpha_mean: float


class BenchReport(BaseModel):
    records: list[BenchRecord]
    speedup: float | None = None


class CheckOutcome(BaseModel):
    name: str
    passed: bool
    detail: str = ""
