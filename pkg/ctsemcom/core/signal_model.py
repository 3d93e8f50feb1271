"""Power normalization, AWGN superposition and unit conversions."""

import numpy as np

from ctsemcom.core.exceptions import NonPositivePower, ShapeMismatch, ZeroSymbolNorm
from ctsemcom.domains.signals import (
    FeatureBlock,
    NoiseBlock,
    ReceivedBlock,
    ReceivedStage,
    TransmitBlock,
)


def normalize_features(x: FeatureBlock, power: float) -> TransmitBlock:
    """Scale every symbol row of `x` to total power `power`."""
    if power <= 0:
        raise NonPositivePower(details=f"user {x.user} budget {power}")

    norms = np.linalg.norm(x.data, axis=1)
    zero_rows = np.flatnonzero(norms == 0)
    if zero_rows.size:
        raise ZeroSymbolNorm(
            details=f"user {x.user}, symbols {zero_rows.tolist()}",
        )

    data = np.sqrt(power) * x.data / norms[:, None]
    return TransmitBlock(user=x.user, data=data)


def _check_shapes(shapes: list[tuple[int, ...]], expected: tuple[int, ...]) -> None:
    for shape in shapes:
        if shape != expected:
            raise ShapeMismatch(details=f"expected {expected}, got {shape}")


def superpose_awgn(t_all: list[TransmitBlock], w: NoiseBlock) -> ReceivedBlock:
    """Y = Σ_n T_n + W."""
    if not t_all:
        raise ShapeMismatch(details="no transmit blocks to superpose")
    _check_shapes([t.shape for t in t_all], w.shape)

    y = np.sum([t.data for t in t_all], axis=0) + w.data
    return ReceivedBlock(data=y, stage=ReceivedStage.AWGN)


def equalize(y_c: ReceivedBlock, alpha: float) -> ReceivedBlock:
    """Receiver scaling y^new = α·y^c."""
    return ReceivedBlock(data=alpha * y_c.data, stage=ReceivedStage.EQUALIZED)


def snr_db_to_sigma_e_sq(snr1_db: float, p_1: float) -> float:
    if p_1 <= 0:
        raise NonPositivePower(details=f"P_1 = {p_1}")
    return p_1 * 10 ** (-snr1_db / 10)


def sigma_f_db_to_linear(sigma_f_db: float) -> float:
    return 10 ** (sigma_f_db / 10)


def linear_to_db(value: float) -> float:
    return 10 * np.log10(value)
