from typing import Annotated, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, field_validator


class AllocationResult(BaseModel):
    """Outcome of a power allocation.

    `effective` holds T^new_n for every user as one N×L×K array
    (s_{n,l,k} = t^r p^r + i t^i p^i). The multipliers and β are only
    produced by the closed-form allocator.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    effective: np.ndarray
    alpha: PositiveFloat
    per_symbol_power: np.ndarray
    lambda_: np.ndarray | None = None
    mu: np.ndarray | None = None
    beta: list[float] | None = None
    fade_floor_hits: Annotated[int, Field(ge=0)] = 0

    @field_validator("effective", "per_symbol_power", "lambda_", "mu", mode="before")
    @classmethod
    def validate_arrays(cls, value):
        if value is None:
            return None
        array = np.array(value, copy=True)
        array.flags.writeable = False
        return array


class IterativeSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_outer_iters: Annotated[int, Field(ge=1)] = 50
    kkt_tol: PositiveFloat = 1e-8
    outer_tol: PositiveFloat = 1e-6
    # "ssdt" starts from the closed-form α, "one" from α = 1
    alpha_init: Literal["ssdt", "one"] | PositiveFloat = "ssdt"


class IterationRecord(BaseModel):
    d2: float
    alpha: float
    max_kkt_residual: float
    inner_iters: int


class IterativeTrace(BaseModel):
    records: list[IterationRecord] = []
    converged: bool = False

    @property
    def outer_iters(self) -> int:
        return len(self.records)

    def d2_sequence(self) -> list[float]:
        return [record.d2 for record in self.records]
