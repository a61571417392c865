"""The epsilon -> 0 constrained system.

State per y-node: dominant trait ``X``, nutrient ``c``, density ``rho`` slaved
to the zero-growth constraint, and the running integrals ``C_acc = int c``
and ``P_acc = int rho`` that rebuild the limit potential

    u(y, x, t) = u0(y, x) + r(x) C_acc - d(x) (t + P_acc).

The trait moves by the gradient flow of fitness rescaled by the curvature of
``u`` at its maximum.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .epsilon_solver import SimulationAbort
from .model import InitialData, ModelParams
from .numerics import ConcavityLoss, Grids, refine_argmax
from .nutrient import coupled_steady_nutrient, step_c_parabolic

logger = logging.getLogger(__name__)


@dataclass
class LimitState:
    t: float
    X: np.ndarray
    rho: np.ndarray
    c: np.ndarray
    C_acc: np.ndarray
    P_acc: np.ndarray


@dataclass
class LimitSnapshot:
    state: LimitState
    uxx: np.ndarray
    maxu_audit: np.ndarray
    argmax_offset: np.ndarray
    lipschitz_t: np.ndarray
    lipschitz_y: np.ndarray
    constraint_rel: float


@dataclass
class LimitRun:
    snapshots: list[LimitSnapshot] = field(default_factory=list)
    max_constraint_rel: float = 0.0
    max_xdot_form_gap: float = 0.0


def constraint_rho(X, c, params: ModelParams):
    """Density making the growth rate vanish at trait ``X``."""
    return params.r(X) * c / params.d(X) - 1.0


def uxx_at(X, t: float, C_acc, P_acc, init: InitialData, params: ModelParams):
    """Trait curvature of the limit potential at ``X``.

    Raises
    ------
    ConcavityLoss
        If the curvature is not negative anywhere.
    """
    val = (init.u0_xx(X) + params.r.derivative(X, 2) * C_acc
           - params.d.derivative(X, 2) * (t + P_acc))
    if np.any(np.asarray(val) >= 0):
        raise ConcavityLoss(f"limit potential lost concavity at t={t:.6g}")
    return val


def x_dot(X, c, uxx, params: ModelParams):
    """Trait velocity with the density eliminated through the constraint."""
    r, d = params.r, params.d
    slope = r.derivative(X, 1) - d.derivative(X, 1) * r(X) / d(X)
    return slope * c / (-uxx)


def x_dot_with_density(X, c, rho, uxx, params: ModelParams):
    """Trait velocity in the form carrying an explicit density."""
    return (params.r.derivative(X, 1) * c - params.d.derivative(X, 1) * (1.0 + rho)) / (-uxx)


def init_limit(params: ModelParams, init: InitialData, grids: Grids) -> LimitState:
    X0, _, c0 = init.profiles(grids.y, params, lambda X: coupled_steady_nutrient(X, params, grids))
    rho = constraint_rho(X0, c0, params)
    zeros = np.zeros_like(X0)
    return LimitState(0.0, X0, rho, c0, zeros, zeros.copy())


def _nutrient(state: LimitState, X: np.ndarray, params: ModelParams, grids: Grids,
              dt: float, picard: int) -> np.ndarray:
    if params.coupling == "elliptic":
        return coupled_steady_nutrient(X, params, grids, c_guess=state.c)
    # lagged density on the diagonal; optional extra passes re-evaluate it
    c = step_c_parabolic(state.c, constraint_rho(state.X, state.c, params), params, grids, dt)
    for _ in range(picard):
        rho_half = 0.5 * (constraint_rho(state.X, state.c, params) + constraint_rho(X, c, params))
        c = step_c_parabolic(state.c, rho_half, params, grids, dt)
    return c


def step_limit(state: LimitState, params: ModelParams, grids: Grids, init: InitialData,
               dt: float | None = None, picard: int = 0) -> LimitState:
    """Midpoint step for ``X``, implicit Euler (or stationary solve) for ``c``,
    constraint for ``rho``, trapezoid accumulators."""
    dt = grids.dt if dt is None else dt
    t = state.t
    X, c, rho = state.X, state.c, state.rho

    k1 = x_dot(X, c, uxx_at(X, t, state.C_acc, state.P_acc, init, params), params)
    X_mid = X + 0.5 * dt * k1
    C_mid = state.C_acc + 0.5 * dt * c
    P_mid = state.P_acc + 0.5 * dt * rho
    if params.coupling == "elliptic":
        c_mid = coupled_steady_nutrient(X_mid, params, grids, c_guess=c)
    else:
        c_mid = c
    k2 = x_dot(X_mid, c_mid, uxx_at(X_mid, t + 0.5 * dt, C_mid, P_mid, init, params), params)
    X_new = X + dt * k2

    c_new = _nutrient(state, X_new, params, grids, dt, picard)
    rho_new = constraint_rho(X_new, c_new, params)
    C_new = state.C_acc + 0.5 * dt * (c + c_new)
    P_new = state.P_acc + 0.5 * dt * (rho + rho_new)
    for arr, name in ((X_new, "trait"), (c_new, "nutrient"), (rho_new, "density")):
        if not np.all(np.isfinite(arr)):
            raise SimulationAbort(f"non-finite {name} in limit step at t={t:.6g}", t)
    return LimitState(t + dt, X_new, rho_new, c_new, C_new, P_new)


def reconstruct_u(state: LimitState, init: InitialData, x: np.ndarray,
                  params: ModelParams, X0: np.ndarray) -> np.ndarray:
    """Limit potential on the (y, x) grid from the accumulators."""
    u = init.u0(X0, x)
    u += params.r(x)[None, :] * state.C_acc[:, None]
    u -= params.d(x)[None, :] * (state.t + state.P_acc)[:, None]
    return u


def constraint_residual_rel(state: LimitState, params: ModelParams) -> float:
    X, c = state.X, state.c
    gain = params.r(X) * c
    loss = params.d(X) * (1.0 + state.rho)
    return float(np.max(np.abs(gain - loss) / np.maximum(np.abs(gain), np.abs(loss))))


def run_limit(params: ModelParams, init: InitialData, grids: Grids,
              snapshot_times: Sequence[float], picard: int = 0,
              dt: float | None = None) -> LimitRun:
    """March the limit system to ``grids.T_final``.

    Every step checks the constraint and the agreement of the two trait
    velocity forms; snapshots audit the rebuilt potential and record
    Lipschitz quotients of ``X`` in ``t`` (running max) and in ``y``.
    """
    dt = grids.dt if dt is None else dt
    n_steps = int(round(grids.T_final / dt))
    wanted = sorted({int(round(t / dt)) for t in snapshot_times})
    state = init_limit(params, init, grids)
    X0 = state.X.copy()
    lip_t = np.zeros_like(X0)
    run = LimitRun()
    for k in range(n_steps + 1):
        run.max_constraint_rel = max(run.max_constraint_rel, constraint_residual_rel(state, params))
        uxx = uxx_at(state.X, state.t, state.C_acc, state.P_acc, init, params)
        gap = np.abs(x_dot(state.X, state.c, uxx, params)
                     - x_dot_with_density(state.X, state.c, state.rho, uxx, params))
        run.max_xdot_form_gap = max(run.max_xdot_form_gap, float(gap.max()))
        if wanted and k == wanted[0]:
            wanted.pop(0)
            u = reconstruct_u(state, init, grids.x, params, X0)
            xs, us, _ = refine_argmax(u, grids.hx)
            lip_y = np.zeros_like(X0)
            if X0.size > 1:
                q = np.abs(np.diff(state.X)) / grids.hy
                lip_y[:-1] = q
                lip_y[1:] = np.maximum(lip_y[1:], q)
            snap_state = LimitState(k * dt, state.X.copy(), state.rho.copy(), state.c.copy(),
                                    state.C_acc.copy(), state.P_acc.copy())
            run.snapshots.append(LimitSnapshot(snap_state, uxx, us, np.abs(xs - state.X),
                                               lip_t.copy(), lip_y,
                                               constraint_residual_rel(state, params)))
        if k == n_steps:
            break
        new = step_limit(state, params, grids, init, dt, picard)
        lip_t = np.maximum(lip_t, np.abs(new.X - state.X) / dt)
        state = new
    return run
