"""Model coefficients, parameters and structural checks.

The population at position ``y`` with trait ``x`` grows at the net rate

    R(x, c, rho) = r(x) * c - d(x) * (1 + rho)

where ``c`` is the local nutrient and ``rho`` the total local density.
Everything the two solvers share about the model lives here: the
coefficient families, the derived density/nutrient bounds and the
assumption checks run before a simulation starts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

# Dense scan used for coefficient extrema and sign checks.
SCAN_POINTS = 10_001
COMPATIBILITY_RTOL = 1e-10

COEFFICIENT_KINDS = ("quadratic-concave-r", "quadratic-convex-d", "tabulated")
COUPLINGS = ("parabolic", "elliptic")


class ModelError(ValueError):
    """Invalid model parameters or initial data."""


class NonExtinctionError(ModelError):
    """The lower density bound rho_m is not positive."""


@dataclass(frozen=True)
class Coefficient:
    """A trait-dependent rate r(x) or d(x) on [0, 1].

    Quadratic kinds are ``base + sign * curvature * (x - center)**2`` with
    ``sign = -1`` for the concave proliferation rate and ``+1`` for the
    convex death rate.  Tabulated coefficients are linear interpolants of
    node samples, with derivatives from repeated second-order differences.
    """

    kind: str
    base: float = 0.0
    curvature: float = 0.0
    center: float = 0.5
    nodes: tuple[float, ...] = ()
    values: tuple[float, ...] = ()
    K0: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in COEFFICIENT_KINDS:
            raise ModelError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == "tabulated":
            if len(self.values) < 3:
                raise ModelError("tabulated coefficient needs at least 3 samples")
            if not self.nodes:
                grid = tuple(np.linspace(0.0, 1.0, len(self.values)).tolist())
                object.__setattr__(self, "nodes", grid)
            if len(self.nodes) != len(self.values):
                raise ModelError("tabulated nodes and values differ in length")

    @classmethod
    def concave_r(cls, r_max: float, r2: float, x_r: float, K0: float | None = None) -> "Coefficient":
        return cls("quadratic-concave-r", base=r_max, curvature=r2, center=x_r, K0=K0)

    @classmethod
    def convex_d(cls, d_min: float, d2: float, x_d: float, K0: float | None = None) -> "Coefficient":
        return cls("quadratic-convex-d", base=d_min, curvature=d2, center=x_d, K0=K0)

    @classmethod
    def tabulated(cls, values: Sequence[float], nodes: Sequence[float] = (), K0: float | None = None) -> "Coefficient":
        return cls("tabulated", nodes=tuple(float(v) for v in nodes),
                   values=tuple(float(v) for v in values), K0=K0)

    @property
    def _sign(self) -> float:
        return -1.0 if self.kind == "quadratic-concave-r" else 1.0

    @cached_property
    def _tabulated_derivatives(self) -> list[np.ndarray]:
        xs = np.asarray(self.nodes)
        derivs = [np.asarray(self.values, dtype=float)]
        for _ in range(3):
            derivs.append(np.gradient(derivs[-1], xs, edge_order=2))
        return derivs

    def derivative(self, x, order: int = 0):
        """Return the ``order``-th derivative (0 to 3) evaluated at ``x``."""
        if order < 0 or order > 3:
            raise ValueError("derivative order must be in 0..3")
        x = np.asarray(x, dtype=float)
        if self.kind == "tabulated":
            out = np.interp(x, self.nodes, self._tabulated_derivatives[order])
            return out if out.ndim else float(out)
        s = self._sign * self.curvature
        if order == 0:
            out = self.base + s * (x - self.center) ** 2
        elif order == 1:
            out = 2.0 * s * (x - self.center)
        elif order == 2:
            out = np.full_like(x, 2.0 * s)
        else:
            out = np.zeros_like(x)
        return out if out.ndim else float(out)

    def __call__(self, x):
        return self.derivative(x, 0)

    def to_config(self) -> dict:
        if self.kind == "tabulated":
            cfg = {"kind": self.kind, "nodes": list(self.nodes), "values": list(self.values)}
        else:
            cfg = {"kind": self.kind, "base": self.base,
                   "curvature": self.curvature, "center": self.center}
        if self.K0 is not None:
            cfg["K0"] = self.K0
        return cfg


@dataclass(frozen=True)
class ModelParams:
    """Nutrient constants, coefficient functions and coupling type."""

    lam: float
    c_B: float
    r: Coefficient
    d: Coefficient
    coupling: str = "parabolic"
    scan_points: int = SCAN_POINTS

    def __post_init__(self) -> None:
        if self.coupling not in COUPLINGS:
            raise ModelError(f"coupling must be one of {COUPLINGS}, got {self.coupling!r}")
        if not self.lam > 0:
            raise ModelError("lambda must be positive")
        if not self.c_B > 0:
            raise ModelError("c_B must be positive")

    @cached_property
    def scan(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.scan_points)

    @cached_property
    def fitness_ratio_range(self) -> tuple[float, float]:
        """(min, max) of r/d over the scan grid."""
        q = self.r(self.scan) / self.d(self.scan)
        return float(q.min()), float(q.max())

    @cached_property
    def rho_M(self) -> float:
        return self.c_B * self.fitness_ratio_range[1] - 1.0

    @cached_property
    def c_m(self) -> float:
        return self.c_B * self.lam / (self.lam + self.rho_M)

    @cached_property
    def rho_m(self) -> float:
        return self.c_m * self.fitness_ratio_range[0] - 1.0


def rho_bounds(params: ModelParams) -> tuple[float, float, float]:
    """Return ``(rho_m, rho_M, c_m)``.

    Raises
    ------
    NonExtinctionError
        If ``rho_m <= 0``; the population is then not guaranteed to persist.
    """
    if params.rho_m <= 0:
        raise NonExtinctionError(
            f"non-extinction condition violated: rho_m = {params.rho_m:.6g} <= 0 "
            f"(lambda={params.lam}, c_B={params.c_B}, "
            f"min r/d={params.fitness_ratio_range[0]:.6g}, max r/d={params.fitness_ratio_range[1]:.6g})"
        )
    return params.rho_m, params.rho_M, params.c_m


def growth_rate(x, c, rho, params: ModelParams):
    """Net per-capita growth rate ``r(x) c - d(x) (1 + rho)``; broadcasts."""
    return params.r(x) * c - params.d(x) * (1.0 + rho)


def equilibrium_nutrient(X, params: ModelParams):
    """Nutrient at which the local algebraic steady state is consistent.

    Solves ``c (lam + rho) = lam c_B`` with ``rho = q c - 1``, ``q = r/d`` at
    trait ``X``: the positive root of ``q c^2 + (lam - 1) c - lam c_B = 0``.
    """
    q = params.r(X) / params.d(X)
    b = params.lam - 1.0
    return (-b + np.sqrt(b * b + 4.0 * q * params.lam * params.c_B)) / (2.0 * q)


# --------------------------------------------------------------------------
# initial data
# --------------------------------------------------------------------------

Profile = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ProfileSpec:
    """A scalar function of ``y`` described by a small config dictionary.

    kinds: ``constant`` (value), ``tanh`` (base + amplitude*tanh(y/scale)),
    ``bump`` (base + amplitude*exp(-y^2 / (2 scale^2))), ``tabulated``
    (nodes, values; linear interpolation, constant extension).
    """

    kind: str = "constant"
    value: float = 0.0
    base: float = 0.0
    amplitude: float = 0.0
    scale: float = 1.0
    nodes: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.kind == "constant":
            return np.full_like(y, self.value)
        if self.kind == "tanh":
            return self.base + self.amplitude * np.tanh(y / self.scale)
        if self.kind == "bump":
            return self.base + self.amplitude * np.exp(-0.5 * (y / self.scale) ** 2)
        if self.kind == "tabulated":
            return np.interp(y, self.nodes, self.values)
        raise ModelError(f"unknown profile kind {self.kind!r}")

    def to_config(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "tabulated":
            return {"kind": "tabulated", "nodes": list(self.nodes), "values": list(self.values)}
        return {"kind": self.kind, "base": self.base, "amplitude": self.amplitude, "scale": self.scale}


@dataclass(frozen=True)
class InitialData:
    """Gaussian-type initial concentration around the trait ``X0(y)``.

    ``rho0`` and ``c0`` left as ``None`` are derived: ``c0`` from the local
    equilibrium (parabolic) or the stationary nutrient solve (elliptic),
    ``rho0`` from the compatibility condition ``R(X0, c0, rho0) = 0``.
    """

    X0: ProfileSpec
    sigma0: float = 0.05
    c0: ProfileSpec | None = None
    rho0: ProfileSpec | None = None

    def __post_init__(self) -> None:
        if not self.sigma0 > 0:
            raise ModelError("sigma0 must be positive")

    @property
    def concavity(self) -> float:
        """Lower bound ``a`` on ``-d^2 u0 / dx^2``."""
        return 1.0 / self.sigma0

    def u0(self, X0: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Limit potential ``-(x - X0)^2 / (2 sigma0)`` on the (y, x) grid."""
        return -((x[None, :] - X0[:, None]) ** 2) / (2.0 * self.sigma0)

    def u0_xx(self, X) -> np.ndarray:
        return np.full_like(np.asarray(X, dtype=float), -1.0 / self.sigma0)

    def u0_eps(self, X0: np.ndarray, rho0: np.ndarray, x: np.ndarray, eps: float) -> np.ndarray:
        """Hopf-Cole potential whose exponential has mass ``rho0`` (Laplace)."""
        shift = eps * np.log(rho0 / math.sqrt(2.0 * math.pi * eps * self.sigma0))
        return self.u0(X0, x) + shift[:, None]

    def profiles(self, y: np.ndarray, params: ModelParams,
                 nutrient_solver: Callable[[np.ndarray], np.ndarray] | None = None):
        """Evaluate ``(X0, rho0, c0)`` on the y-grid.

        ``nutrient_solver`` maps a trait profile to the stationary nutrient
        and is required for the elliptic coupling when ``c0`` is not given.
        """
        X0 = np.asarray(self.X0(y), dtype=float)
        if self.c0 is not None:
            c0 = np.asarray(self.c0(y), dtype=float)
        elif params.coupling == "elliptic" and nutrient_solver is not None:
            c0 = nutrient_solver(X0)
        else:
            c0 = equilibrium_nutrient(X0, params)
        if self.rho0 is not None:
            rho0 = np.asarray(self.rho0(y), dtype=float)
        else:
            rho0 = params.r(X0) * c0 / params.d(X0) - 1.0
        return X0, rho0, c0


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    witness: float
    detail: str = ""
    section: str = "model"


@dataclass
class ValidationReport:
    checks: list[Check] = field(default_factory=list)
    rho_m: float = math.nan
    rho_M: float = math.nan
    c_m: float = math.nan

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def add(self, name: str, passed: bool, witness: float, detail: str = "",
            section: str = "model") -> None:
        self.checks.append(Check(name, bool(passed), float(witness), detail, section))

    def format(self) -> str:
        lines = [f"rho_m = {self.rho_m:.10g}  rho_M = {self.rho_M:.10g}  c_m = {self.c_m:.10g}"]
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            lines.append(f"[{mark}] {c.name:<28s} witness={c.witness:.6g}  {c.detail}")
        return "\n".join(lines)


def validate_assumptions(params: ModelParams, init: InitialData | None, y: np.ndarray,
                         x: np.ndarray,
                         nutrient_solver: Callable[[np.ndarray], np.ndarray] | None = None) -> ValidationReport:
    """Check the structural assumptions on a grid and report witnesses.

    Coefficient checks run on the union of the x-grid and the dense scan.
    Never raises for a failed assumption; the caller decides whether to stop.
    """
    rep = ValidationReport(rho_m=params.rho_m, rho_M=params.rho_M, c_m=params.c_m)
    xs = np.union1d(np.asarray(x, dtype=float), params.scan)
    r, d = params.r, params.d

    rv, dv = r(xs), d(xs)
    rep.add("r positive", rv.min() > 0, rv.min(), f"at x={xs[rv.argmin()]:.4g}")
    rep.add("d positive", dv.min() > 0, dv.min(), f"at x={xs[dv.argmin()]:.4g}")

    r2, d2 = r.derivative(xs, 2), d.derivative(xs, 2)
    rep.add("r'' < 0", r2.max() < 0, r2.max(), f"at x={xs[r2.argmax()]:.4g}")
    rep.add("d'' > 0", d2.min() > 0, d2.min(), f"at x={xs[d2.argmin()]:.4g}")

    xg = np.asarray(x, dtype=float)
    if xg.size >= 3:
        sr = np.diff(r(xg), 2)
        sd = np.diff(d(xg), 2)
        rep.add("r second differences < 0", sr.max() < 0, sr.max())
        rep.add("d second differences > 0", sd.min() > 0, sd.min())

    derivative_sum = sum(np.abs(r.derivative(xs, k)) + np.abs(d.derivative(xs, k)) for k in (1, 2, 3))
    for coef, label in ((r, "r"), (d, "d")):
        if coef.K0 is not None:
            rep.add(f"{label} derivative bound K0", derivative_sum.max() <= coef.K0,
                    derivative_sum.max(), f"K0={coef.K0}")

    rep.add("non-extinction rho_m > 0", params.rho_m > 0, params.rho_m)

    if init is None:
        return rep

    X0, rho0, c0 = init.profiles(y, params, nutrient_solver)

    def add(name, passed, witness, detail=""):
        rep.add(name, passed, witness, detail, section="initial")

    add("X0 in (0, 1)", (X0.min() > 0) and (X0.max() < 1),
        min(X0.min(), 1 - X0.max()), f"range [{X0.min():.4g}, {X0.max():.4g}]")
    resid = growth_rate(X0, c0, rho0, params)
    scale = np.maximum(np.abs(r(X0) * c0), 1.0)
    rel = np.abs(resid) / scale
    add("initial compatibility", rel.max() <= COMPATIBILITY_RTOL, rel.max(), f"at y={y[rel.argmax()]:.4g}")
    add("rho0 >= rho_m", rho0.min() >= params.rho_m, rho0.min() - params.rho_m)
    add("rho0 <= rho_M", rho0.max() <= params.rho_M, params.rho_M - rho0.max())
    if params.coupling == "parabolic":
        add("c0 > c_m", c0.min() > params.c_m, c0.min() - params.c_m)
        add("c0 < c_B", c0.max() < params.c_B, params.c_B - c0.max())
        if y.size > 1:
            slope = np.abs(np.diff(c0) / np.diff(y)).max()
            add("c0 Lipschitz", np.isfinite(slope), slope)
    return rep
