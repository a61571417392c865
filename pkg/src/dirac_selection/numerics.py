"""Grids, quadrature, tridiagonal solves and sub-grid argmax location."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

PIVOT_FLOOR = 1e-14


class TridiagonalBreakdown(ArithmeticError):
    """A Thomas-algorithm pivot fell below ``PIVOT_FLOOR``."""


class ConcavityLoss(ArithmeticError):
    """A potential expected to be strictly concave is not."""


@dataclass(frozen=True)
class Grids:
    """Uniform space grid on [-L, L], trait grid on [0, 1] and time step."""

    L: float = 5.0
    Ny: int = 201
    Nx: int = 201
    dt: float = 1e-3
    T_final: float = 1.0

    def __post_init__(self) -> None:
        if self.Ny < 1 or self.Nx < 3:
            raise ValueError("need Ny >= 1 and Nx >= 3")
        if self.Ny > 1 and not self.L > 0:
            raise ValueError("L must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.T_final < self.dt:
            raise ValueError("T_final must be at least dt")

    @cached_property
    def y(self) -> np.ndarray:
        if self.Ny == 1:
            return np.zeros(1)
        return np.linspace(-self.L, self.L, self.Ny)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.Nx)

    @property
    def hy(self) -> float:
        return 2.0 * self.L / (self.Ny - 1) if self.Ny > 1 else np.inf

    @property
    def hx(self) -> float:
        return 1.0 / (self.Nx - 1)

    @property
    def n_steps(self) -> int:
        return int(round(self.T_final / self.dt))

    def step_index(self, t: float) -> int:
        """Index of the step landing on time ``t``; ``t`` must be on the grid."""
        k = int(round(t / self.dt))
        if abs(k * self.dt - t) > 1e-9 * max(1.0, abs(t)) or k < 0 or k > self.n_steps:
            raise ValueError(f"time {t} is not a multiple of dt={self.dt} within [0, T_final]")
        return k


def trapezoid_mass(f, hx: float | None = None) -> np.ndarray | float:
    """Trapezoid integral over [0, 1] along the last axis."""
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    if n < 2:
        raise ValueError("need at least 2 samples")
    h = 1.0 / (n - 1) if hx is None else hx
    inner = f[..., 1:-1].sum(axis=-1)
    out = h * (inner + 0.5 * (f[..., 0] + f[..., -1]))
    return out if np.ndim(out) else float(out)


def stabilized_exp_mass(u, eps: float, hx: float | None = None):
    """Trapezoid integral of ``exp(u / eps)`` along the last axis.

    Factors out ``exp(max u / eps)`` so large negative excursions underflow
    to zero instead of producing overflow or NaN.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    u = np.asarray(u, dtype=float)
    m = u.max(axis=-1, keepdims=True)
    body = trapezoid_mass(np.exp((u - m) / eps), hx)
    return np.exp(np.squeeze(m, axis=-1) / eps) * body


def log_exp_mass(u, eps: float, hx: float | None = None):
    """``eps * log`` of :func:`stabilized_exp_mass` without leaving log space."""
    u = np.asarray(u, dtype=float)
    m = u.max(axis=-1)
    body = trapezoid_mass(np.exp((u - m[..., None]) / eps), hx)
    return m + eps * np.log(body)


@dataclass
class TridiagonalSystem:
    """``sub[i] v[i-1] + diag[i] v[i] + sup[i] v[i+1] = rhs[i]``.

    ``sub[0]`` and ``sup[-1]`` are ignored.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[1:] += self.sub[1:] * v[:-1]
        out[:-1] += self.sup[:-1] * v[1:]
        return out

    def is_diagonally_dominant(self) -> bool:
        off = np.zeros_like(self.diag)
        off[1:] += np.abs(self.sub[1:])
        off[:-1] += np.abs(self.sup[:-1])
        return bool(np.all(np.abs(self.diag) >= off))

    def dense(self) -> np.ndarray:
        n = self.diag.size
        A = np.diag(self.diag)
        if n > 1:
            A += np.diag(self.sub[1:], -1) + np.diag(self.sup[:-1], 1)
        return A


def solve_tridiagonal(system: TridiagonalSystem) -> np.ndarray:
    """Thomas algorithm.

    Raises
    ------
    TridiagonalBreakdown
        If a pivot magnitude falls below ``PIVOT_FLOOR``.
    """
    # plain floats: the sweep is sequential and numpy scalar access is slow
    a = system.sub.tolist()
    b = system.diag.tolist()
    c = system.sup.tolist()
    r = system.rhs.tolist()
    n = len(b)
    cp = [0.0] * n
    rp = [0.0] * n
    piv = b[0]
    if abs(piv) < PIVOT_FLOOR:
        raise TridiagonalBreakdown(f"pivot {piv!r} at row 0")
    cp[0] = c[0] / piv if n > 1 else 0.0
    rp[0] = r[0] / piv
    for i in range(1, n):
        piv = b[i] - a[i] * cp[i - 1]
        if abs(piv) < PIVOT_FLOOR:
            raise TridiagonalBreakdown(f"pivot {piv!r} at row {i}")
        cp[i] = c[i] / piv if i < n - 1 else 0.0
        rp[i] = (r[i] - a[i] * rp[i - 1]) / piv
    v = [0.0] * n
    v[-1] = rp[-1]
    for i in range(n - 2, -1, -1):
        v[i] = rp[i] - cp[i] * v[i + 1]
    return np.array(v)


def neumann_laplacian(n: int, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Diagonals of ``-Delta_h`` with mirror ghost nodes at both ends."""
    sub = np.full(n, -1.0 / h**2)
    sup = np.full(n, -1.0 / h**2)
    diag = np.full(n, 2.0 / h**2)
    if n == 1:
        return np.zeros(1), np.zeros(1), np.zeros(1)
    sup[0] = -2.0 / h**2
    sub[-1] = -2.0 / h**2
    sub[0] = 0.0
    sup[-1] = 0.0
    return sub, diag, sup


def refine_argmax(u, hx: float | None = None):
    """Sub-grid maximiser of each row of ``u`` by a three-point parabola.

    Returns ``(x_star, u_star, uxx_star)`` with one entry per row (scalars for
    1-D input).  At a boundary node the parabola through the first (last)
    three nodes is used and the vertex is clamped to [0, 1].  Ties go to the
    smallest index.

    Raises
    ------
    ConcavityLoss
        If the fitted second derivative is not negative.
    """
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 1
    u2 = np.atleast_2d(u)
    n = u2.shape[1]
    if n < 3:
        raise ValueError("need at least 3 trait nodes")
    h = 1.0 / (n - 1) if hx is None else hx
    rows = np.arange(u2.shape[0])
    k = np.argmax(u2, axis=1)  # first occurrence on ties
    mid = np.clip(k, 1, n - 2)
    um, u0, up = u2[rows, mid - 1], u2[rows, mid], u2[rows, mid + 1]
    second = um - 2.0 * u0 + up
    if np.any(second >= 0):
        bad = int(np.flatnonzero(second >= 0)[0])
        raise ConcavityLoss(f"non-negative fitted curvature in row {bad}")
    offset = 0.5 * (um - up) / second
    x_star = np.clip((mid + offset) * h, 0.0, 1.0)
    s = x_star / h - mid
    u_star = u0 + 0.5 * (up - um) * s + 0.5 * second * s * s
    uxx = second / h**2
    if scalar:
        return float(x_star[0]), float(u_star[0]), float(uxx[0])
    return x_star, u_star, uxx
