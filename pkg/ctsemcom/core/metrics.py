"""Distortion metrics between the AWGN reference and the transferred signal."""

import numpy as np

from ctsemcom.core.channel import faded_superposition
from ctsemcom.core.exceptions import ShapeMismatch
from ctsemcom.domains.signals import (
    ChannelTensor,
    ReceivedBlock,
    UserSignals,
    stack_blocks,
)


def d1_empirical(y_new: ReceivedBlock, y: ReceivedBlock) -> float:
    """‖Y^new − Y‖² summed over both components."""
    if y_new.shape != y.shape:
        raise ShapeMismatch(details=f"{y_new.shape} vs {y.shape}")
    diff = y_new.data - y.data
    return float(np.sum(diff.real**2) + np.sum(diff.imag**2))


def square_terms(
    s_all: UserSignals, t_all: UserSignals, h: ChannelTensor, alpha: float
) -> float:
    """Σ_{l,k} (α ẏ^{cr} − ẏ^r)² + (α ẏ^{ci} − ẏ^i)²."""
    s = stack_blocks(s_all)
    y_dot = np.sum(stack_blocks(t_all), axis=0)
    diff = alpha * faded_superposition(s, h) - y_dot
    return float(np.sum(diff.real**2) + np.sum(diff.imag**2))


def noise_floor(n_symbols: int, n_subcarriers: int, alpha: float, sigma_e_sq: float) -> float:
    """2LK(α²+1)σ_e², the part of d2 no allocation can remove."""
    return 2 * n_symbols * n_subcarriers * (alpha**2 + 1) * sigma_e_sq


def d2_analytic(
    s_all: UserSignals,
    t_all: UserSignals,
    h: ChannelTensor,
    alpha: float,
    sigma_e_sq: float,
) -> float:
    """Expected distortion: square terms plus the noise expectation."""
    t = stack_blocks(t_all)
    _, n_symbols, n_subcarriers = t.shape
    return square_terms(s_all, t, h, alpha) + noise_floor(
        n_symbols, n_subcarriers, alpha, sigma_e_sq
    )


def power_violation(per_symbol_power: np.ndarray, budgets: list[float]) -> float:
    """Largest relative excess of p_{n,l} over its budget, 0 when feasible."""
    ratio = per_symbol_power / np.asarray(budgets)[:, None]
    return float(max(0.0, np.max(ratio) - 1.0))
