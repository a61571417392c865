"""JSON scenario configuration: schema, defaults, loading and echo."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from ..model import (COEFFICIENT_KINDS, COUPLINGS, Coefficient, InitialData, ModelError,
                     ModelParams, ProfileSpec, validate_assumptions)
from ..epsilon_solver import TIME_CONVENTIONS
from ..numerics import Grids
from ..nutrient import coupled_steady_nutrient


class ConfigError(ValueError):
    """Unreadable or invalid configuration; ``errors`` holds one dict per problem."""

    def __init__(self, message: str, errors: list[dict] | None = None):
        super().__init__(message)
        self.errors = errors or [{"key": "", "message": message}]


DEFAULT_CONFIG: dict[str, Any] = {
    "model": {
        "lambda": 8.0,
        "c_B": 4.0,
        "coupling": "parabolic",
        "r": {"kind": "quadratic-concave-r", "base": 3.0, "curvature": 1.0, "center": 0.5},
        "d": {"kind": "quadratic-convex-d", "base": 1.0, "curvature": 1.0, "center": 0.5},
    },
    "initial": {
        "X0": {"kind": "tanh", "base": 0.5, "amplitude": 0.2, "scale": 1.0},
        "sigma0": 0.05,
        "c0": None,
        "rho0": None,
    },
    "grids": {"L": 5.0, "Ny": 201, "Nx": 201, "dt": 0.001, "T_final": 1.0},
    "solver": {"time_convention": "selection", "picard": 0, "snapshot_every": 0.1},
    "sweep": {"eps_list": [0.1, 0.05, 0.025, 0.0125], "compare_times": [0.5, 1.0]},
    "outputs": {"dir": "out", "plots": True},
    "test_forcing": None,
}

# config key -> (symbol, meaning); printed by --echo-config
SYMBOLS: dict[str, tuple[str, str]] = {
    "model.lambda": ("λ", "nutrient exchange rate with the reservoir"),
    "model.c_B": ("c_B", "reservoir nutrient concentration"),
    "model.r": ("r(x)", "proliferation rate of trait x (concave)"),
    "model.d": ("d(x)", "death rate of trait x (convex)"),
    "model.coupling": ("", "parabolic or elliptic nutrient equation"),
    "initial.X0": ("X⁰(y)", "initial dominant trait"),
    "initial.sigma0": ("σ₀", "initial trait variance scale; concavity a = 1/σ₀"),
    "initial.c0": ("c⁰(y)", "initial nutrient (null: derived)"),
    "initial.rho0": ("ϱ⁰(y)", "initial total density (null: compatibility)"),
    "grids.L": ("L", "half-width of the truncated space interval"),
    "grids.dt": ("Δt", "time step"),
    "sweep.eps_list": ("ε", "scale-separation parameters"),
    "derived.rho_m": ("ϱ_m", "lower density bound"),
    "derived.rho_M": ("ϱ_M", "upper density bound"),
    "derived.c_m": ("c_m", "lower nutrient bound"),
}

_profile = {
    "oneOf": [
        {"type": "null"},
        {"type": "object", "required": ["kind"], "additionalProperties": False,
         "properties": {"kind": {"enum": ["constant", "tanh", "bump", "tabulated"]},
                        "value": {"type": "number"}, "base": {"type": "number"},
                        "amplitude": {"type": "number"}, "scale": {"type": "number", "exclusiveMinimum": 0},
                        "nodes": {"type": "array", "items": {"type": "number"}},
                        "values": {"type": "array", "items": {"type": "number"}}}},
    ]
}
_coefficient = {
    "type": "object", "required": ["kind"], "additionalProperties": False,
    "properties": {"kind": {"enum": list(COEFFICIENT_KINDS)},
                   "base": {"type": "number"}, "curvature": {"type": "number"},
                   "center": {"type": "number"}, "K0": {"type": ["number", "null"]},
                   "nodes": {"type": "array", "items": {"type": "number"}},
                   "values": {"type": "array", "items": {"type": "number"}, "minItems": 3}},
}
_positive = {"type": "number", "exclusiveMinimum": 0}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "dirac_selection scenario",
    "type": "object",
    "additionalProperties": False,
    "patternProperties": {"^_": {}},
    "properties": {
        "model": {"type": "object", "additionalProperties": False, "properties": {
            "lambda": _positive, "c_B": _positive, "coupling": {"enum": list(COUPLINGS)},
            "r": _coefficient, "d": _coefficient}},
        "initial": {"type": "object", "additionalProperties": False, "properties": {
            "X0": _profile, "sigma0": _positive, "c0": _profile, "rho0": _profile}},
        "grids": {"type": "object", "additionalProperties": False, "properties": {
            "L": _positive, "Ny": {"type": "integer", "minimum": 1},
            "Nx": {"type": "integer", "minimum": 3}, "dt": _positive, "T_final": _positive}},
        "solver": {"type": "object", "additionalProperties": False, "properties": {
            "time_convention": {"enum": list(TIME_CONVENTIONS)},
            "picard": {"enum": [0, 1]}, "snapshot_every": _positive}},
        "sweep": {"type": "object", "additionalProperties": False, "properties": {
            "eps_list": {"type": "array", "items": _positive, "minItems": 1},
            "compare_times": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}}},
        "outputs": {"type": "object", "additionalProperties": False, "properties": {
            "dir": {"type": "string"}, "plots": {"type": "boolean"}}},
        "test_forcing": {"oneOf": [{"type": "null"}, {
            "type": "object", "additionalProperties": False, "required": ["kind"],
            "properties": {"kind": {"enum": ["manufactured_cos"]}, "amplitude": {"type": "number"}}}]},
    },
}


@dataclass(frozen=True)
class ManufacturedForcing:
    """Source making ``c_B - A cos(pi y / L) exp(-t)`` solve the nutrient equation."""

    amplitude: float
    L: float
    lam: float
    c_B: float

    def exact(self, y: np.ndarray, t: float) -> np.ndarray:
        return self.c_B - self.amplitude * np.cos(math.pi * y / self.L) * math.exp(-t)

    def __call__(self, y: np.ndarray, t: float, rho: np.ndarray) -> np.ndarray:
        k = math.pi / self.L
        wave = self.amplitude * np.cos(k * y) * math.exp(-t)
        c = self.c_B - wave
        # c_t = wave, c_yy = k^2 wave
        return wave - k * k * wave + (rho + self.lam) * c - self.lam * self.c_B


@dataclass(frozen=True)
class Scenario:
    params: ModelParams
    init: InitialData
    grids: Grids
    time_convention: str = "selection"
    picard: int = 0
    snapshot_every: float = 0.1
    eps_list: tuple[float, ...] = (0.1, 0.05, 0.025, 0.0125)
    compare_times: tuple[float, ...] = (0.5, 1.0)
    out_dir: str = "out"
    plots: bool = True
    forcing_amplitude: float | None = None

    @property
    def forcing(self) -> ManufacturedForcing | None:
        if self.forcing_amplitude is None:
            return None
        return ManufacturedForcing(self.forcing_amplitude, self.grids.L, self.params.lam, self.params.c_B)

    def snapshot_times(self) -> list[float]:
        """Regular snapshots plus the comparison times, all on the step grid."""
        g = self.grids
        every = max(1, int(round(self.snapshot_every / g.dt)))
        steps = set(range(0, g.n_steps + 1, every)) | {g.n_steps}
        steps |= {g.step_index(t) for t in self.compare_times}
        return [k * g.dt for k in sorted(steps)]

    def to_config(self) -> dict[str, Any]:
        p, i, g = self.params, self.init, self.grids
        return {
            "model": {"lambda": p.lam, "c_B": p.c_B, "coupling": p.coupling,
                      "r": p.r.to_config(), "d": p.d.to_config()},
            "initial": {"X0": i.X0.to_config(), "sigma0": i.sigma0,
                        "c0": i.c0.to_config() if i.c0 else None,
                        "rho0": i.rho0.to_config() if i.rho0 else None},
            "grids": {"L": g.L, "Ny": g.Ny, "Nx": g.Nx, "dt": g.dt, "T_final": g.T_final},
            "solver": {"time_convention": self.time_convention, "picard": self.picard,
                       "snapshot_every": self.snapshot_every},
            "sweep": {"eps_list": list(self.eps_list), "compare_times": list(self.compare_times)},
            "outputs": {"dir": self.out_dir, "plots": self.plots},
            "test_forcing": (None if self.forcing_amplitude is None
                             else {"kind": "manufactured_cos", "amplitude": self.forcing_amplitude}),
        }


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict) and key not in ("r", "d", "X0", "c0", "rho0"):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _profile_from(cfg: dict | None) -> ProfileSpec | None:
    if cfg is None:
        return None
    kw = {k: v for k, v in cfg.items() if k != "kind"}
    for k in ("nodes", "values"):
        if k in kw:
            kw[k] = tuple(kw[k])
    return ProfileSpec(cfg["kind"], **kw)


def _coefficient_from(cfg: dict) -> Coefficient:
    if cfg["kind"] == "tabulated":
        return Coefficient.tabulated(cfg["values"], cfg.get("nodes", ()), cfg.get("K0"))
    return Coefficient(cfg["kind"], base=cfg.get("base", 0.0), curvature=cfg.get("curvature", 0.0),
                       center=cfg.get("center", 0.5), K0=cfg.get("K0"))


def scenario_from_dict(raw: dict[str, Any], validate: bool = True) -> Scenario:
    """Fill defaults, check the schema and build a scenario.

    With ``validate`` the model assumptions are checked too and every failed
    check is collected into a single :class:`ConfigError`.
    """
    validator = jsonschema.Draft202012Validator(SCHEMA)
    problems = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if problems:
        errors = [{"key": ".".join(str(p) for p in e.absolute_path) or "<root>", "message": e.message}
                  for e in problems]
        raise ConfigError("; ".join(f"{e['key']}: {e['message']}" for e in errors), errors)
    cfg = _merge(DEFAULT_CONFIG, {k: v for k, v in raw.items() if not k.startswith("_")})
    m, i, g, s, sw, o = (cfg[k] for k in ("model", "initial", "grids", "solver", "sweep", "outputs"))
    try:
        params = ModelParams(m["lambda"], m["c_B"], _coefficient_from(m["r"]), _coefficient_from(m["d"]),
                             m["coupling"])
        init = InitialData(_profile_from(i["X0"]), i["sigma0"], _profile_from(i["c0"]), _profile_from(i["rho0"]))
        grids = Grids(g["L"], g["Ny"], g["Nx"], g["dt"], g["T_final"])
    except (ModelError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    eps_list = tuple(float(e) for e in sw["eps_list"])
    errors = []
    if any(a <= b for a, b in zip(eps_list, eps_list[1:])):
        errors.append({"key": "sweep.eps_list", "message": "must be strictly decreasing"})
    for t in sw["compare_times"]:
        try:
            grids.step_index(t)
        except ValueError as exc:
            errors.append({"key": "sweep.compare_times", "message": str(exc)})
    forcing = cfg["test_forcing"]
    scenario = Scenario(params, init, grids, s["time_convention"], s["picard"], s["snapshot_every"],
                        eps_list, tuple(float(t) for t in sw["compare_times"]), o["dir"], o["plots"],
                        None if forcing is None else float(forcing.get("amplitude", 0.1)))
    if validate:
        report = validate_scenario(scenario)
        for chk in report.failures():
            errors.append({"key": chk.section, "check": chk.name, "witness": chk.witness,
                           "message": f"{chk.name} failed (witness {chk.witness:.6g}) {chk.detail}".strip()})
    if errors:
        raise ConfigError("; ".join(f"{e['key']}: {e['message']}" for e in errors), errors)
    return scenario


def validate_scenario(scenario: Scenario):
    p, g = scenario.params, scenario.grids
    return validate_assumptions(p, scenario.init, g.y, g.x,
                                lambda X: coupled_steady_nutrient(X, p, g))


def load_config(path: str | Path, validate: bool = True) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    return loads_config(text, validate, source=str(path))


def loads_config(text: str, validate: bool = True, source: str = "<string>") -> Scenario:
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}",
                          [{"key": "", "line": exc.lineno, "column": exc.colno, "message": exc.msg}]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be an object")
    return scenario_from_dict(raw, validate)


def echo_config(scenario: Scenario) -> str:
    """Fully resolved config as JSON, with the symbol table under ``_symbols``.

    Reloading the output gives back an equal scenario.
    """
    cfg = scenario.to_config()
    p = scenario.params
    symbols = {k: {"symbol": s, "meaning": m} for k, (s, m) in SYMBOLS.items()}
    symbols["derived.rho_m"]["value"] = p.rho_m
    symbols["derived.rho_M"]["value"] = p.rho_M
    symbols["derived.c_m"]["value"] = p.c_m
    return json.dumps({"_symbols": symbols, **cfg}, indent=2, ensure_ascii=False)


def symbol_table(scenario: Scenario) -> str:
    p = scenario.params
    lines = [f"{'key':<22s} {'symbol':<8s} meaning"]
    for key, (sym, meaning) in SYMBOLS.items():
        lines.append(f"{key:<22s} {sym:<8s} {meaning}")
    lines.append(f"rho_m = {p.rho_m:.10g}, rho_M = {p.rho_M:.10g}, c_m = {p.c_m:.10g}")
    return "\n".join(lines)
