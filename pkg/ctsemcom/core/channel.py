"""Rayleigh fading, AWGN sampling and the faded multi-user uplink."""

import numpy as np

from ctsemcom.core.exceptions import ShapeMismatch
from ctsemcom.core.rng import RngStream
from ctsemcom.core.signal_model import sigma_f_db_to_linear
from ctsemcom.domains.signals import (
    ChannelTensor,
    NoiseBlock,
    ReceivedBlock,
    ReceivedStage,
    TransmitBlock,
)
from ctsemcom.domains.system import SystemConfig


def sample_rayleigh(cfg: SystemConfig, rng: RngStream) -> ChannelTensor:
    """Draw H with E[|h|²] = σ_f², i.e. components of variance σ_f²/2 each."""
    sigma_f_sq = sigma_f_db_to_linear(cfg.sigma_f_db)
    scale = np.sqrt(sigma_f_sq / 2)
    shape = (cfg.n_symbols, cfg.n_subcarriers, cfg.n_users)

    generator = rng.generator()
    real = generator.normal(0.0, scale, size=shape)
    imag = generator.normal(0.0, scale, size=shape)
    return ChannelTensor(data=real + 1j * imag, sigma_f_sq_linear=sigma_f_sq)


def sample_awgn(cfg: SystemConfig, rng: RngStream) -> NoiseBlock:
    """Draw W with w^r, w^i each Gaussian(0, σ_e²)."""
    if cfg.sigma_e_sq == 0:
        return NoiseBlock(data=np.zeros(cfg.shape, dtype=np.complex128))

    scale = np.sqrt(cfg.sigma_e_sq)
    generator = rng.generator()
    real = generator.normal(0.0, scale, size=cfg.shape)
    imag = generator.normal(0.0, scale, size=cfg.shape)
    return NoiseBlock(data=real + 1j * imag)


def faded_superposition(s: np.ndarray, h: ChannelTensor) -> np.ndarray:
    """Noise-free ẏ^c = Σ_n h_n·s_n for an N×L×K effective tensor."""
    h_users = h.per_user()
    if s.shape != h_users.shape:
        raise ShapeMismatch(details=f"signals {s.shape} vs channel {h_users.shape}")

    # y^cr = Σ (s^r h^r − s^i h^i), y^ci = Σ (s^r h^i + s^i h^r)
    real = np.sum(s.real * h_users.real - s.imag * h_users.imag, axis=0)
    imag = np.sum(s.real * h_users.imag + s.imag * h_users.real, axis=0)
    return real + 1j * imag


def apply_faded_uplink(
    s_all: list[TransmitBlock], h: ChannelTensor, w_new: NoiseBlock
) -> ReceivedBlock:
    if len(s_all) != h.n_users:
        raise ShapeMismatch(
            details=f"{len(s_all)} transmit blocks for a {h.n_users}-user channel"
        )
    s = np.stack([block.data for block in s_all])
    y_dot = faded_superposition(s, h)
    if y_dot.shape != w_new.shape:
        raise ShapeMismatch(details=f"signal {y_dot.shape} vs noise {w_new.shape}")
    return ReceivedBlock(data=y_dot + w_new.data, stage=ReceivedStage.FADED)
