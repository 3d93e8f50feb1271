from enum import StrEnum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator


def _readonly(value: Any, ndim: int, dtype=np.complex128) -> np.ndarray:
    array = np.array(value, dtype=dtype, copy=True)
    if array.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d tensor, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError("tensor entries must be finite")
    array.flags.writeable = False
    return array


class _Block(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def validate_data(cls, value):
        return _readonly(value, ndim=2)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape  # type: ignore[return-value]


class FeatureBlock(_Block):
    """Semantic features X_n of one user, L symbols by K subcarriers."""

    user: int


class TransmitBlock(_Block):
    """Normalized (or power-allocated) transmit signal T_n of one user."""

    user: int

    def symbol_power(self) -> np.ndarray:
        return np.sum(np.abs(self.data) ** 2, axis=1)


class ReceivedStage(StrEnum):
    AWGN = "awgn"
    FADED = "faded"
    EQUALIZED = "equalized"


class ReceivedBlock(_Block):
    stage: ReceivedStage


class NoiseBlock(_Block):
    """Complex noise with per-component variance sigma_e_sq."""


class ChannelTensor(BaseModel):
    """Fading coefficients H laid out L×K×N."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    data: np.ndarray
    sigma_f_sq_linear: float

    @field_validator("data", mode="before")
    @classmethod
    def validate_data(cls, value):
        return _readonly(value, ndim=3)

    @property
    def n_users(self) -> int:
        return self.data.shape[2]

    def per_user(self) -> np.ndarray:
        """View of the coefficients as N×L×K."""
        return np.moveaxis(self.data, 2, 0)

    def scaled(self, factor: float) -> "ChannelTensor":
        return ChannelTensor(
            data=self.data * factor,
            sigma_f_sq_linear=self.sigma_f_sq_linear * factor**2,
        )


UserSignals = list[TransmitBlock] | list[FeatureBlock] | np.ndarray


def stack_blocks(blocks: UserSignals) -> np.ndarray:
    """Stack per-user blocks into an N×L×K array (arrays pass through)."""
    if isinstance(blocks, np.ndarray):
        return blocks
    return np.stack([block.data for block in blocks])


def transmit_blocks(data: np.ndarray) -> list[TransmitBlock]:
    return [TransmitBlock(user=n, data=data[n]) for n in range(data.shape[0])]
