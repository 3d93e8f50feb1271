"""Alternating baseline: QCQP over the allocation at fixed α, then α in closed form.

At fixed α the distortion is a convex quadratic in the effective components
with one ball constraint per (user, symbol), so it separates per symbol. It is
solved here by accelerated projected gradient with adaptive restart; the
solution is accepted once the gradient-mapping (KKT) residual is below
`kkt_tol`. The α step minimizes the same distortion exactly.
"""

from typing import NamedTuple

import numpy as np
from loguru import logger

from ctsemcom.config.settings import settings as app_settings
from ctsemcom.core.channel import faded_superposition
from ctsemcom.core.exceptions import DegenerateDenominator, SolverDidNotConverge
from ctsemcom.core.metrics import d2_analytic, square_terms
from ctsemcom.core.ssdt import ssdt_allocate
from ctsemcom.domains.allocation import (
    AllocationResult,
    IterationRecord,
    IterativeSettings,
    IterativeTrace,
)
from ctsemcom.domains.signals import ChannelTensor, UserSignals, stack_blocks
from ctsemcom.domains.system import SystemConfig

ALPHA_FLOOR = 1e-12


class QcqpSolution(NamedTuple):
    effective: np.ndarray
    kkt_residual: float
    iterations: int


class _Problem:
    """min Σ_{l,k} |α Σ_n h s − ẏ|²  s.t.  Σ_k |s_{n,l,k}|² ≤ b_n."""

    def __init__(self, t: np.ndarray, h: ChannelTensor, alpha: float, budgets: list[float]):
        self.h = h
        self.h_conj = np.conj(h.per_user())
        self.alpha = alpha
        self.target = np.sum(t, axis=0)
        self.budgets = np.asarray(budgets, dtype=float)[:, None]

        gain = np.sum(np.abs(h.per_user()) ** 2, axis=0)
        lipschitz = 2 * alpha**2 * np.max(gain, axis=1)
        self.step = (1 / np.maximum(lipschitz, np.finfo(float).tiny))[None, :, None]

    def residual(self, s: np.ndarray) -> np.ndarray:
        return self.alpha * faded_superposition(s, self.h) - self.target

    def gradient(self, s: np.ndarray) -> np.ndarray:
        return 2 * self.alpha * self.h_conj * self.residual(s)[None]

    def objective(self, s: np.ndarray) -> float:
        return float(np.sum(np.abs(self.residual(s)) ** 2))

    def project(self, s: np.ndarray) -> np.ndarray:
        power = np.sum(np.abs(s) ** 2, axis=2)
        with np.errstate(divide="ignore"):
            shrink = np.where(power > self.budgets, np.sqrt(self.budgets / power), 1.0)
        return s * shrink[..., None]

    def kkt_residual(self, s: np.ndarray) -> float:
        mapped = self.project(s - self.step * self.gradient(s))
        mapping = (s - mapped) / self.step
        return float(max(np.max(np.abs(mapping.real)), np.max(np.abs(mapping.imag))))


def qcqp_solve_fixed_alpha(
    t_all: UserSignals,
    h: ChannelTensor,
    cfg: SystemConfig,
    alpha: float,
    warm_start: np.ndarray | None = None,
    *,
    kkt_tol: float = 1e-8,
    max_iters: int | None = None,
) -> QcqpSolution:
    t = stack_blocks(t_all)
    problem = _Problem(t, h, alpha, cfg.symbol_budgets())
    max_iters = max_iters or app_settings.QCQP_MAX_INNER_ITERS
    check_every = max(1, app_settings.QCQP_CHECK_EVERY)

    x = problem.project(np.zeros_like(t) if warm_start is None else np.asarray(warm_start))
    residual = problem.kkt_residual(x)
    if residual <= kkt_tol:
        return QcqpSolution(x, residual, 0)

    best, best_objective, best_residual = x, problem.objective(x), residual
    y = x
    theta = np.ones(t.shape[1])

    for iteration in range(1, max_iters + 1):
        x_next = problem.project(y - problem.step * problem.gradient(y))

        # restart the momentum of symbols where it points uphill
        restart = np.sum(np.real((y - x_next) * np.conj(x_next - x)), axis=(0, 2)) > 0
        theta_next = (1 + np.sqrt(1 + 4 * theta**2)) / 2
        momentum = np.where(restart, 0.0, (theta - 1) / theta_next)
        theta_next = np.where(restart, 1.0, theta_next)

        y = x_next + momentum[None, :, None] * (x_next - x)
        x, theta = x_next, theta_next

        if iteration % check_every:
            continue
        residual = problem.kkt_residual(x)
        objective = problem.objective(x)
        if objective <= best_objective:
            best, best_objective, best_residual = x, objective, residual
        if residual <= kkt_tol:
            logger.debug(f"QCQP converged at α={alpha:.6g} after {iteration} iterations")
            return QcqpSolution(x, residual, iteration)

    raise SolverDidNotConverge(
        details=f"KKT residual {best_residual:.3e} > {kkt_tol:.1e} after {max_iters} iterations",
        best_iterate=best,
        residual=best_residual,
    )


def alpha_update(
    s_all: UserSignals, t_all: UserSignals, h: ChannelTensor, sigma_e_sq: float
) -> float:
    """Stationary point of d2 in α, projected onto α ≥ ALPHA_FLOOR."""
    s = stack_blocks(s_all)
    y_dot = np.sum(stack_blocks(t_all), axis=0)
    y_c = faded_superposition(s, h)

    numerator = np.sum(y_c.real * y_dot.real + y_c.imag * y_dot.imag)
    denominator = np.sum(np.abs(y_c) ** 2) + 2 * sigma_e_sq * y_c.size
    if denominator <= 0:
        raise DegenerateDenominator(details="faded signal and noise are both zero")
    return float(max(numerator / denominator, ALPHA_FLOOR))


def _initial_alpha(settings: IterativeSettings, ssdt_alpha: float) -> float:
    if settings.alpha_init == "ssdt":
        return ssdt_alpha
    if settings.alpha_init == "one":
        return 1.0
    return float(settings.alpha_init)


def iterative_allocate(
    t_all: UserSignals,
    h: ChannelTensor,
    cfg: SystemConfig,
    settings: IterativeSettings | None = None,
) -> tuple[AllocationResult, IterativeTrace]:
    settings = settings or IterativeSettings()
    t = stack_blocks(t_all)

    # the closed-form point is feasible and serves as warm start
    start = ssdt_allocate(t_all, h, cfg)
    alpha = _initial_alpha(settings, start.alpha)
    s = np.array(start.effective)
    d2_prev = d2_analytic(s, t, h, alpha, cfg.sigma_e_sq)
    # changes below rounding level of the target energy count as converged
    d2_resolution = np.finfo(float).eps * float(np.sum(np.abs(np.sum(t, axis=0)) ** 2))

    trace = IterativeTrace()
    for outer in range(settings.max_outer_iters):
        try:
            solution = qcqp_solve_fixed_alpha(
                t, h, cfg, alpha, warm_start=s, kkt_tol=settings.kkt_tol
            )
            candidate, residual, inner = solution
        except SolverDidNotConverge as ex:
            logger.warning(f"outer iteration {outer}: {ex}")
            candidate, residual, inner = ex.best_iterate, ex.residual, -1

        if square_terms(candidate, t, h, alpha) <= square_terms(s, t, h, alpha):
            s = candidate

        alpha = alpha_update(s, t, h, cfg.sigma_e_sq)
        d2 = d2_analytic(s, t, h, alpha, cfg.sigma_e_sq)
        trace.records.append(
            IterationRecord(d2=d2, alpha=alpha, max_kkt_residual=residual, inner_iters=inner)
        )
        logger.debug(f"outer iteration {outer}: d2={d2:.10g} α={alpha:.6g}")

        if abs(d2_prev - d2) <= settings.outer_tol * max(d2_prev, d2_resolution):
            trace.converged = residual <= settings.kkt_tol
            break
        d2_prev = d2

    if not trace.converged:
        logger.warning(
            f"iterative allocation stopped after {trace.outer_iters} outer iterations without converging"
        )

    result = AllocationResult(
        effective=s,
        alpha=alpha,
        per_symbol_power=np.sum(np.abs(s) ** 2, axis=2),
        fade_floor_hits=start.fade_floor_hits,
    )
    return result, trace
