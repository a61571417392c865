"""Nutrient solves on the truncated y-line with zero-flux ends.

Parabolic:  dc/dt - c_yy + (rho + lam) c = lam c_B   (implicit Euler)
Elliptic:         - c_yy + (rho + lam) c = lam c_B
"""
from __future__ import annotations

import logging

import numpy as np

from .model import ModelParams
from .numerics import Grids, TridiagonalSystem, neumann_laplacian, solve_tridiagonal

logger = logging.getLogger(__name__)

FIXED_POINT_DAMPING = 0.5
FIXED_POINT_TOL = 1e-10
FIXED_POINT_MAXITER = 200


class FixedPointFailure(ArithmeticError):
    pass


def assemble_nutrient(rho: np.ndarray, params: ModelParams, grids: Grids,
                      dt: float | None = None, c_old: np.ndarray | None = None,
                      source: np.ndarray | None = None) -> TridiagonalSystem:
    """Implicit-Euler system when ``dt`` is given, stationary system otherwise."""
    rho = np.asarray(rho, dtype=float)
    sub, diag, sup = neumann_laplacian(rho.size, grids.hy)
    diag = diag + rho + params.lam
    rhs = np.full(rho.size, params.lam * params.c_B)
    if dt is not None:
        diag = diag + 1.0 / dt
        rhs = rhs + c_old / dt
    if source is not None:
        rhs = rhs + source
    return TridiagonalSystem(sub, diag, sup, rhs)


def step_c_parabolic(c_old: np.ndarray, rho: np.ndarray, params: ModelParams, grids: Grids,
                     dt: float, source: np.ndarray | None = None) -> np.ndarray:
    """One implicit-Euler step of the parabolic nutrient equation.

    ``source`` is an extra right-hand side evaluated at the new time level
    (manufactured-solution hook).
    """
    return solve_tridiagonal(assemble_nutrient(rho, params, grids, dt, c_old, source))


def solve_c_elliptic(rho: np.ndarray, params: ModelParams, grids: Grids,
                     source: np.ndarray | None = None) -> np.ndarray:
    """Stationary nutrient for a given density profile."""
    return solve_tridiagonal(assemble_nutrient(rho, params, grids, source=source))


def coupled_steady_nutrient(X: np.ndarray, params: ModelParams, grids: Grids,
                            c_guess: np.ndarray | None = None,
                            damping: float = FIXED_POINT_DAMPING,
                            tol: float = FIXED_POINT_TOL,
                            maxiter: int = FIXED_POINT_MAXITER) -> np.ndarray:
    """Stationary nutrient when the density is slaved to it by the constraint.

    Damped fixed point ``c <- (1-w) c + w * E(q(X) c - 1)`` where ``E`` is the
    stationary solve and ``q = r/d``.  Stops when the sup-norm update falls
    below ``tol``.
    """
    q = params.r(X) / params.d(X)
    c = np.array(c_guess if c_guess is not None else np.full(X.shape, params.c_B), dtype=float)
    for it in range(maxiter):
        target = solve_c_elliptic(q * c - 1.0, params, grids)
        new = (1.0 - damping) * c + damping * target
        delta = np.max(np.abs(new - c))
        c = new
        if delta < tol:
            return c
    raise FixedPointFailure(f"nutrient fixed point did not converge in {maxiter} iterations (last update {delta:.3g})")
