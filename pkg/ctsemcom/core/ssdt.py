"""Closed-form power allocation by dual transformation of the distortion problem.

The distortion-minimization problem is swapped for a β-weighted sum-power
problem whose zero-forcing constraints make the receiver-side copy of the
AWGN superposition exact:

    min Σ_n β_n Σ_{l,k} |s_{n,l,k}|²   s.t.  α Σ_n h_{n,l,k} s_{n,l,k} = Σ_n t_{n,l,k}

Its Lagrangian stationarity conditions give λ, μ and s in closed form. α is
then the smallest value that keeps every user's per-symbol power inside its
budget. Everything is computed on effective components s = t·p, so a zero
feature component never causes a division by zero.
"""

from typing import NamedTuple

import numpy as np
from loguru import logger

from ctsemcom.core.channel import faded_superposition
from ctsemcom.core.exceptions import (
    DegenerateChannel,
    NonFiniteCandidate,
    NonPositivePower,
    ShapeMismatch,
)
from ctsemcom.domains.allocation import AllocationResult
from ctsemcom.domains.signals import ChannelTensor, TransmitBlock, stack_blocks
from ctsemcom.domains.system import PowerConvention, SystemConfig

FACTOR_REPORT_THRESHOLD = 1e-12


class Multipliers(NamedTuple):
    """λ_{l,k} and μ_{l,k} of the zero-forcing constraints."""

    lambda_: np.ndarray
    mu: np.ndarray
    fade_floor_hits: int


class _Denominator(NamedTuple):
    value: np.ndarray
    fade_floor_hits: int


def compute_beta(powers: list[float]) -> list[float]:
    """β_n = 1/√P_n."""
    if any(p <= 0 for p in powers):
        raise NonPositivePower(details=f"budgets {powers}")
    return [float(1 / np.sqrt(p)) for p in powers]


def _stack_inputs(t_all: list[TransmitBlock], h: ChannelTensor):
    t = stack_blocks(t_all)
    h_users = h.per_user()
    if t.shape != h_users.shape:
        raise ShapeMismatch(details=f"signals {t.shape} vs channel {h_users.shape}")
    return t, h_users


def _denominator(
    h_users: np.ndarray, beta: np.ndarray, fade_floor_eps: float
) -> _Denominator:
    """D_{l,k} = Σ_n |h_{n,l,k}|²/β_n, floored at `fade_floor_eps`."""
    gains = np.abs(h_users) ** 2
    value = np.sum(gains / beta[:, None, None], axis=0)

    below = value < fade_floor_eps
    hits = int(np.count_nonzero(below))
    if hits:
        logger.warning(f"{hits} subcarrier(s) floored at fade_floor_eps={fade_floor_eps}")
        value = np.where(below, fade_floor_eps, value)
    if np.any(value == 0):
        raise DegenerateChannel(
            details=f"{int(np.count_nonzero(value == 0))} subcarrier(s) with D = 0"
        )
    return _Denominator(value, hits)


def _multipliers(
    t: np.ndarray, denominator: np.ndarray, alpha: float, hits: int
) -> Multipliers:
    a = np.sum(t, axis=0)
    scale = -2 / (alpha**2 * denominator)
    return Multipliers(lambda_=scale * a.real, mu=scale * a.imag, fade_floor_hits=hits)


def compute_multipliers(
    t_all: list[TransmitBlock],
    h: ChannelTensor,
    beta: list[float],
    alpha: float,
    fade_floor_eps: float = 1e-12,
) -> Multipliers:
    t, h_users = _stack_inputs(t_all, h)
    denominator = _denominator(h_users, np.asarray(beta), fade_floor_eps)
    return _multipliers(t, denominator.value, alpha, denominator.fade_floor_hits)


def _effective(
    h_users: np.ndarray,
    beta: np.ndarray,
    alpha: float,
    lambda_: np.ndarray,
    mu: np.ndarray,
) -> np.ndarray:
    weight = alpha / (2 * beta[:, None, None])
    real = -weight * (lambda_ * h_users.real + mu * h_users.imag)
    imag = weight * (lambda_ * h_users.imag - mu * h_users.real)
    return real + 1j * imag


def compute_effective_components(
    t_all: list[TransmitBlock],
    h: ChannelTensor,
    beta: list[float],
    alpha: float,
    lambda_: np.ndarray,
    mu: np.ndarray,
) -> np.ndarray:
    """Effective transmit components s (N×L×K) from the multipliers."""
    _, h_users = _stack_inputs(t_all, h)
    return _effective(h_users, np.asarray(beta), alpha, lambda_, mu)


def _alpha_candidates(
    t: np.ndarray,
    h_users: np.ndarray,
    beta: np.ndarray,
    budgets: np.ndarray,
    denominator: np.ndarray,
) -> np.ndarray:
    a_sq = np.abs(np.sum(t, axis=0)) ** 2
    gains = np.abs(h_users) ** 2
    numerator = np.sum(gains * (a_sq / denominator**2)[None], axis=2)
    return np.sqrt(numerator / (budgets * beta**2)[:, None])


def compute_alpha_candidates(
    t_all: list[TransmitBlock],
    h: ChannelTensor,
    beta: list[float],
    powers: list[float],
    convention: PowerConvention,
    fade_floor_eps: float = 1e-12,
) -> np.ndarray:
    """α_{n,l} that puts user n's symbol l exactly on its budget (N×L)."""
    t, h_users = _stack_inputs(t_all, h)
    beta_arr = np.asarray(beta)
    denominator = _denominator(h_users, beta_arr, fade_floor_eps)
    budgets = _symbol_budgets(powers, convention, t.shape[2])
    return _alpha_candidates(t, h_users, beta_arr, budgets, denominator.value)


def _symbol_budgets(
    powers: list[float], convention: PowerConvention, n_subcarriers: int
) -> np.ndarray:
    budgets = np.asarray(powers, dtype=float)
    if convention == PowerConvention.PER_SUBCARRIER_AVERAGE:
        return n_subcarriers * budgets
    return budgets


def select_alpha(candidates: np.ndarray) -> float:
    """Largest candidate, so every user/symbol stays within budget."""
    candidates = np.asarray(candidates, dtype=float)
    if candidates.size == 0:
        raise NonFiniteCandidate(details="no candidates")
    if not np.all(np.isfinite(candidates)) or np.any(candidates <= 0):
        raise NonFiniteCandidate(details=f"candidates {candidates.tolist()}")
    return float(np.max(candidates))


def ssdt_allocate(
    t_all: list[TransmitBlock], h: ChannelTensor, cfg: SystemConfig
) -> AllocationResult:
    t, h_users = _stack_inputs(t_all, h)
    beta = np.asarray(compute_beta(cfg.power_budget))
    budgets = np.asarray(cfg.symbol_budgets())

    denominator = _denominator(h_users, beta, cfg.fade_floor_eps)
    candidates = _alpha_candidates(t, h_users, beta, budgets, denominator.value)
    alpha = select_alpha(candidates)

    multipliers = _multipliers(t, denominator.value, alpha, denominator.fade_floor_hits)
    effective = _effective(h_users, beta, alpha, multipliers.lambda_, multipliers.mu)
    per_symbol_power = np.sum(np.abs(effective) ** 2, axis=2)

    return AllocationResult(
        effective=effective,
        alpha=alpha,
        per_symbol_power=per_symbol_power,
        lambda_=multipliers.lambda_,
        mu=multipliers.mu,
        beta=beta.tolist(),
        fade_floor_hits=multipliers.fade_floor_hits,
    )


def derive_power_factors(
    result: AllocationResult, t_all: list[TransmitBlock]
) -> tuple[np.ndarray, np.ndarray]:
    """p^r = s^r/t^r and p^i = s^i/t^i, NaN where the feature component is ~0."""
    t = stack_blocks(t_all)
    s = result.effective
    with np.errstate(divide="ignore", invalid="ignore"):
        p_r = np.where(np.abs(t.real) > FACTOR_REPORT_THRESHOLD, s.real / t.real, np.nan)
        p_i = np.where(np.abs(t.imag) > FACTOR_REPORT_THRESHOLD, s.imag / t.imag, np.nan)
    return p_r, p_i


def zero_forcing_residual(
    effective: np.ndarray, t: np.ndarray, h: ChannelTensor, alpha: float
) -> float:
    """max over (l,k) and both components of |α·ẏ^c − ẏ|."""
    y_dot = np.sum(t, axis=0)
    residual = alpha * faded_superposition(effective, h) - y_dot
    return float(max(np.max(np.abs(residual.real)), np.max(np.abs(residual.imag))))


def solve_p3_kkt_system(
    t_all: list[TransmitBlock],
    h: ChannelTensor,
    beta: list[float],
    alpha: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Solve the Lagrangian stationarity system of the sum-power problem numerically.

    Per (l,k) the unknowns are the 2N real effective components and the two
    multipliers; the system [[2B, Jᵀ], [J, 0]] [x; ν] = [0; b] is solved densely.
    Returns (effective, lambda, mu) with the same layout as the closed form.
    """
    t, h_users = _stack_inputs(t_all, h)
    n_users, n_symbols, n_subcarriers = t.shape
    size = 2 * n_users + 2

    beta_arr = np.asarray(beta, dtype=float)
    hr = np.moveaxis(h_users.real, 0, -1).reshape(-1, n_users)
    hi = np.moveaxis(h_users.imag, 0, -1).reshape(-1, n_users)
    a = np.sum(t, axis=0).reshape(-1)
    n_points = a.size

    system = np.zeros((n_points, size, size))
    rhs = np.zeros((n_points, size))
    diagonal = 2 * np.concatenate([beta_arr, beta_arr])
    system[:, np.arange(2 * n_users), np.arange(2 * n_users)] = diagonal

    # rows of J: real and imaginary parts of α Σ_n h_n s_n
    jacobian = np.zeros((n_points, 2, 2 * n_users))
    jacobian[:, 0, :n_users] = alpha * hr
    jacobian[:, 0, n_users:] = -alpha * hi
    jacobian[:, 1, :n_users] = alpha * hi
    jacobian[:, 1, n_users:] = alpha * hr

    system[:, : 2 * n_users, 2 * n_users :] = np.swapaxes(jacobian, 1, 2)
    system[:, 2 * n_users :, : 2 * n_users] = jacobian
    rhs[:, 2 * n_users] = a.real
    rhs[:, 2 * n_users + 1] = a.imag

    solution = np.linalg.solve(system, rhs[..., None])[..., 0]
    s = solution[:, :n_users] + 1j * solution[:, n_users : 2 * n_users]
    effective = np.moveaxis(s.reshape(n_symbols, n_subcarriers, n_users), -1, 0)
    lambda_ = solution[:, 2 * n_users].reshape(n_symbols, n_subcarriers)
    mu = solution[:, 2 * n_users + 1].reshape(n_symbols, n_subcarriers)
    return effective, lambda_, mu
