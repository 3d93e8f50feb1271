from typing import Annotated, Literal

from pydantic import (
    AliasChoices,
    BaseModel,
    ConfigDict,
    Field,
    PositiveFloat,
    ValidationError,
    field_validator,
    model_validator,
)

from ctsemcom.config.settings import settings
from ctsemcom.core.exceptions import ConfigError
from ctsemcom.core.signal_model import snr_db_to_sigma_e_sq
from ctsemcom.domains.allocation import IterativeSettings
from ctsemcom.domains.experiment import Scheme, SweepAxis
from ctsemcom.domains.system import PowerConvention, SystemConfig

GAUSSIAN_FEATURES = "gaussian"


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class RunConfig(BaseModel):
    """Contents of a key=value run configuration file."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    n_users: Annotated[int, Field(ge=1)] = 2
    n_symbols: Annotated[int, Field(ge=1)] = 8
    n_subcarriers: Annotated[int, Field(ge=1)] = 64
    power_w: list[PositiveFloat] = [0.8, 0.2]
    snr1_db: float = 5.0
    sigma_f_db: float = 3.0
    power_convention: PowerConvention = PowerConvention.PER_SUBCARRIER_AVERAGE
    fade_floor_eps: Annotated[float, Field(ge=0)] = 1e-12
    seed: Annotated[int, Field(ge=0, lt=2**64)] = 0
    trials: Annotated[int, Field(ge=1)] = settings.DEFAULT_TRIALS
    schemes: list[Scheme] = Field(
        default=[Scheme.SSDT], validation_alias=AliasChoices("schemes", "scheme")
    )
    features: str = GAUSSIAN_FEATURES

    max_outer_iters: Annotated[int, Field(ge=1)] = 50
    kkt_tol: PositiveFloat = 1e-8
    outer_tol: PositiveFloat = 1e-6
    alpha_init: Literal["ssdt", "one"] = "ssdt"

    @field_validator("power_w", "schemes", mode="before")
    @classmethod
    def validate_lists(cls, value):
        return _split_list(value)

    @field_validator("power_convention", mode="before")
    @classmethod
    def validate_power_convention(cls, value):
        if isinstance(value, str):
            compact = value.replace("_", "").replace("-", "").lower()
            for convention in PowerConvention:
                if convention.value.replace("_", "") == compact:
                    return convention
        return value

    @model_validator(mode="after")
    def validate_power_budgets(self):
        if len(self.power_w) != self.n_users:
            raise ValueError(
                f"power_w lists {len(self.power_w)} budget(s) for {self.n_users} user(s)"
            )
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        return self

    @property
    def uses_gaussian_features(self) -> bool:
        return self.features == GAUSSIAN_FEATURES

    def to_system_config(self) -> SystemConfig:
        return SystemConfig(
            n_users=self.n_users,
            n_symbols=self.n_symbols,
            n_subcarriers=self.n_subcarriers,
            power_budget=list(self.power_w),
            sigma_e_sq=snr_db_to_sigma_e_sq(self.snr1_db, self.power_w[0]),
            sigma_f_db=self.sigma_f_db,
            power_convention=self.power_convention,
            fade_floor_eps=self.fade_floor_eps,
            seed=self.seed,
        )

    def iterative_settings(self) -> IterativeSettings:
        return IterativeSettings(
            max_outer_iters=self.max_outer_iters,
            kkt_tol=self.kkt_tol,
            outer_tol=self.outer_tol,
            alpha_init=self.alpha_init,
        )

    def at_point(self, axis: SweepAxis, value: float) -> "RunConfig":
        """This configuration with one sweep axis set to `value`."""
        update: dict = {axis: value}
        if axis == "n_users":
            n_users = int(value)
            if n_users != value or n_users < 1:
                raise ValueError(f"n_users must be a positive integer, got {value}")
            # extra users reuse the last budget
            padded = self.power_w + [self.power_w[-1]] * max(0, n_users - len(self.power_w))
            update = {"n_users": n_users, "power_w": padded[:n_users]}
        try:
            return RunConfig.model_validate({**self.model_dump(), **update})
        except ValidationError as ex:
            raise ConfigError(message=f"invalid sweep point {axis}={value}", details=str(ex)) from ex
