from enum import StrEnum
from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field, field_validator


class PowerConvention(StrEnum):
    """How the per-user budget P_n is read by the allocators."""

    # (1/K)·Σ_k |s|² ≤ P_n, i.e. a per-symbol budget of K·P_n
    PER_SUBCARRIER_AVERAGE = "per_subcarrier_average"
    # Σ_k |s|² ≤ P_n, the normalization used for the transmitted features
    PER_SYMBOL_TOTAL = "per_symbol_total"


class SystemConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_users: Annotated[int, Field(ge=1)]
    n_symbols: Annotated[int, Field(ge=1)]
    n_subcarriers: Annotated[int, Field(ge=1)]
    power_budget: list[float]
    sigma_e_sq: Annotated[float, Field(ge=0)]
    sigma_f_db: float
    power_convention: PowerConvention = PowerConvention.PER_SUBCARRIER_AVERAGE
    fade_floor_eps: Annotated[float, Field(ge=0)] = 1e-12
    seed: Annotated[int, Field(ge=0, lt=2**64)] = 0

    @field_validator("power_budget")
    @classmethod
    def validate_power_budget(cls, value: list[float], info):
        n_users = info.data.get("n_users")
        if n_users is not None and len(value) != n_users:
            raise ValueError(
                f"power_budget must hold one budget per user ({n_users}), got {len(value)}"
            )
        if any(p <= 0 for p in value):
            raise ValueError("every power budget must be > 0")
        return value

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_symbols, self.n_subcarriers)

    def symbol_budget(self, user: int) -> float:
        """Per-symbol power budget of `user` under the configured convention."""
        budget = self.power_budget[user]
        if self.power_convention == PowerConvention.PER_SUBCARRIER_AVERAGE:
            return self.n_subcarriers * budget
        return budget

    def symbol_budgets(self) -> list[float]:
        return [self.symbol_budget(n) for n in range(self.n_users)]
