from typing import NamedTuple

import numpy as np
from loguru import logger

from ctsemcom.core.rng import RngStream
from ctsemcom.domains.signals import FeatureBlock
from ctsemcom.domains.system import SystemConfig

MAX_ROW_REDRAWS = 100


class GaussianDraw(NamedTuple):
    blocks: list[FeatureBlock]
    regenerated_rows: int


def regenerate_zero_rows(data: np.ndarray, generator: np.random.Generator) -> int:
    """Redraw every all-zero symbol row of an N×L×K tensor in place; returns the redraw count."""
    n_subcarriers = data.shape[-1]
    regenerated = 0
    for _ in range(MAX_ROW_REDRAWS):
        zero_rows = np.argwhere(np.all(data == 0, axis=-1))
        if zero_rows.size == 0:
            break
        for user, symbol in zero_rows:
            data[user, symbol] = generator.standard_normal(
                n_subcarriers
            ) + 1j * generator.standard_normal(n_subcarriers)
            regenerated += 1
    return regenerated


def draw_gaussian_features(cfg: SystemConfig, rng: RngStream) -> GaussianDraw:
    generator = rng.generator()
    shape = (cfg.n_users, cfg.n_symbols, cfg.n_subcarriers)
    data = generator.standard_normal(shape) + 1j * generator.standard_normal(shape)

    regenerated = regenerate_zero_rows(data, generator)
    if regenerated:
        logger.warning(f"regenerated {regenerated} all-zero feature symbol row(s)")

    blocks = [FeatureBlock(user=n, data=data[n]) for n in range(cfg.n_users)]
    return GaussianDraw(blocks=blocks, regenerated_rows=regenerated)


def gen_gaussian_features(cfg: SystemConfig, rng: RngStream) -> list[FeatureBlock]:
    """Synthetic stand-in for encoder output: i.i.d. unit-variance complex Gaussian components."""
    return draw_gaussian_features(cfg, rng).blocks
