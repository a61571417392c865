"""Finite-epsilon simulation in Hopf-Cole variables.

The density is carried as ``u = eps * ln n`` on the (y, x) grid.  With the
selection time scaling the population equation becomes ``du/dt = R(x, c, rho)``
with no ``1/eps``: epsilon only enters through ``rho = int exp(u/eps) dx`` and
the initial data, so the u-update is exact for frozen ``c`` and ``rho``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .model import InitialData, ModelError, ModelParams, growth_rate
from .numerics import Grids, refine_argmax, stabilized_exp_mass
from .nutrient import coupled_steady_nutrient, solve_c_elliptic, step_c_parabolic

logger = logging.getLogger(__name__)

TIME_CONVENTIONS = ("selection", "raw")
BOUND_SLACK = 1e-3
SOLVER_SLACK = 1e-10
INIT_MASS_RTOL = 0.1

Forcing = Callable[[np.ndarray, float, np.ndarray], np.ndarray]


class SimulationAbort(RuntimeError):
    """A run hit a non-finite value; ``t`` is the last valid time."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


@dataclass
class EpsState:
    t: float
    eps: float
    u: np.ndarray
    c: np.ndarray
    rho: np.ndarray


@dataclass
class RunMetrics:
    """Per-snapshot diagnostics; array fields are indexed by y-node."""

    t: float
    X_eps: np.ndarray
    width: np.ndarray
    max_u: np.ndarray
    uxx: np.ndarray
    constraint_residual: np.ndarray
    strongconv_gap: np.ndarray
    violations: dict[str, int] = field(default_factory=dict)
    worst_violation: float = 0.0

    @property
    def bound_violations(self) -> int:
        return sum(self.violations.values())


def _r_d(params: ModelParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return params.r(x), params.d(x)


def init_state(params: ModelParams, init: InitialData, grids: Grids, eps: float) -> EpsState:
    """Gaussian-type initial potential whose exponential has mass ``rho0``.

    Raises
    ------
    ModelError
        If the quadrature of ``exp(u/eps)`` misses ``rho0`` by more than 10%,
        i.e. the trait grid is too coarse for this epsilon.
    """
    if not eps > 0:
        raise ModelError("eps must be positive")
    width = math.sqrt(eps * init.sigma0)
    if width < 4 * grids.hx:
        logger.warning("initial trait width %.3g is under 4 trait cells (hx=%.3g)", width, grids.hx)
    X0, rho0, c0 = init.profiles(grids.y, params, lambda X: coupled_steady_nutrient(X, params, grids))
    u = init.u0_eps(X0, rho0, grids.x, eps)
    rho = stabilized_exp_mass(u, eps, grids.hx)
    err = np.max(np.abs(rho / rho0 - 1.0))
    if err > INIT_MASS_RTOL:
        raise ModelError(f"initial mass off by {err:.3g} relative; refine the trait grid for eps={eps}")
    c = solve_c_elliptic(rho, params, grids) if params.coupling == "elliptic" else c0.copy()
    return EpsState(0.0, eps, u, c, rho)


def _guard(u: np.ndarray, grids: Grids, t: float) -> None:
    if np.all(np.isfinite(u)):
        return
    j, i = np.argwhere(~np.isfinite(u))[0]
    raise SimulationAbort(f"non-finite potential at y={grids.y[j]:.6g}, x={grids.x[i]:.6g}, t={t:.6g}", t)


def step_u(state: EpsState, params: ModelParams, grids: Grids, dt: float,
           picard: int = 0, time_convention: str = "selection") -> tuple[np.ndarray, np.ndarray]:
    """Advance the potential by ``dt`` with ``c`` and ``rho`` lagged.

    With ``picard=1`` the step is redone once with the density averaged over
    the old and predicted values.  ``time_convention='raw'`` runs the
    population on the unscaled clock, i.e. the rate is multiplied by eps.
    """
    rx, dx = _r_d(params, grids.x)
    scale = dt if time_convention == "selection" else dt * state.eps

    def advance(rho):
        rate = rx[None, :] * state.c[:, None] - dx[None, :] * (1.0 + rho)[:, None]
        return state.u + scale * rate

    u = advance(state.rho)
    _guard(u, grids, state.t)
    rho = stabilized_exp_mass(u, state.eps, grids.hx)
    for _ in range(picard):
        u = advance(0.5 * (state.rho + rho))
        _guard(u, grids, state.t)
        rho = stabilized_exp_mass(u, state.eps, grids.hx)
    return u, rho


def step(state: EpsState, params: ModelParams, grids: Grids, picard: int = 0,
         time_convention: str = "selection", forcing: Forcing | None = None) -> EpsState:
    dt = grids.dt
    u, rho = step_u(state, params, grids, dt, picard, time_convention)
    t = state.t + dt
    if params.coupling == "elliptic":
        c = solve_c_elliptic(rho, params, grids)
    else:
        source = forcing(grids.y, t, rho) if forcing is not None else None
        c = step_c_parabolic(state.c, rho, params, grids, dt, source)
    if not np.all(np.isfinite(c)):
        raise SimulationAbort(f"non-finite nutrient at t={t:.6g}", state.t)
    return EpsState(t, state.eps, u, c, rho)


def bound_violations(c: np.ndarray, rho: np.ndarray, params: ModelParams,
                     slack: float = BOUND_SLACK) -> tuple[dict[str, int], float]:
    """Count nodes breaking the a priori bounds; return counts and worst excess."""
    excess = {
        "c >= 0": -c - SOLVER_SLACK,
        "c <= c_B": c - params.c_B - SOLVER_SLACK,
        "rho <= rho_M": rho - params.rho_M - slack,
        "c >= c_m": params.c_m - c - slack,
        "rho >= rho_m": params.rho_m - rho - slack,
    }
    counts = {k: int(np.count_nonzero(v > 0)) for k, v in excess.items()}
    worst = max(0.0, *(float(v.max()) for v in excess.values()))
    return counts, worst


def diagnostics(state: EpsState, params: ModelParams, grids: Grids) -> RunMetrics:
    X, umax, uxx = refine_argmax(state.u, grids.hx)
    width = np.sqrt(state.eps / np.abs(uxx))
    residual = np.abs(growth_rate(X, state.c, state.rho, params))
    rho = state.rho
    gap = np.abs(rho * rho - rho * state.c * params.r(X) / params.d(X) + rho)
    counts, worst = bound_violations(state.c, rho, params)
    return RunMetrics(state.t, X, width, umax, uxx, residual, gap, counts, worst)


def run_epsilon(params: ModelParams, init: InitialData, grids: Grids, eps: float,
                snapshot_times: Sequence[float], picard: int = 0,
                time_convention: str = "selection", forcing: Forcing | None = None,
                ) -> list[tuple[EpsState, RunMetrics]]:
    """March to ``grids.T_final`` and record diagnostics at the snapshot times.

    Bound violations are recorded in the metrics, not raised.  Snapshot
    states hold copies, so the caller may keep them.
    """
    if time_convention not in TIME_CONVENTIONS:
        raise ValueError(f"time_convention must be one of {TIME_CONVENTIONS}")
    wanted = sorted({grids.step_index(t) for t in snapshot_times})
    state = init_state(params, init, grids, eps)
    out: list[tuple[EpsState, RunMetrics]] = []
    for k in range(grids.n_steps + 1):
        if wanted and k == wanted[0]:
            wanted.pop(0)
            snap = replace(state, t=k * grids.dt)
            metrics = diagnostics(snap, params, grids)
            if metrics.bound_violations:
                logger.warning("eps=%g t=%.4g: %d bound violations (worst %.3g)",
                               eps, snap.t, metrics.bound_violations, metrics.worst_violation)
            out.append((snap, metrics))
        if k == grids.n_steps:
            break
        state = step(state, params, grids, picard, time_convention, forcing)
    return out
