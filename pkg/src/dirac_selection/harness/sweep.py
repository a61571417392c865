"""Epsilon sweep against the limit system."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..epsilon_solver import SimulationAbort, run_epsilon
from ..limit_solver import run_limit
from ..numerics import ConcavityLoss, TridiagonalBreakdown
from ..nutrient import FixedPointFailure
from .config import Scenario
from .io import eps_filename, write_epsilon_csv, write_limit_csv, write_report_csv

logger = logging.getLogger(__name__)

RUNTIME_ERRORS = (SimulationAbort, ConcavityLoss, TridiagonalBreakdown, FixedPointFailure)


@dataclass
class Trajectory:
    """Snapshot profiles of one run; ``eps`` is None for the limit run."""

    eps: float | None
    t: np.ndarray
    y: np.ndarray
    X: np.ndarray
    rho: np.ndarray
    c: np.ndarray
    width: np.ndarray | None = None
    max_u: np.ndarray | None = None
    residual: np.ndarray | None = None

    @property
    def label(self) -> str:
        return "limit" if self.eps is None else f"eps={self.eps:g}"

    def at(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.t - t)))
        if abs(self.t[k] - t) > 1e-9:
            raise KeyError(f"no snapshot at t={t}")
        return k


@dataclass
class ReportRow:
    eps: float
    t: float
    err_X: float
    err_rho: float
    err_c: float
    width_ratio: float
    maxu_drift: float
    residual: float


@dataclass
class ConvergenceReport:
    coupling: str
    eps_list: tuple[float, ...]
    compare_times: tuple[float, ...]
    hx: float
    rows: list[ReportRow] = field(default_factory=list)
    aborted: dict[str, str] = field(default_factory=dict)
    trajectories: list[Trajectory] = field(default_factory=list)

    def series(self, metric: str, t: float) -> list[float]:
        """Values of ``metric`` at time ``t`` ordered along ``eps_list``."""
        by_eps = {r.eps: getattr(r, metric) for r in self.rows if abs(r.t - t) < 1e-12}
        return [by_eps[e] for e in self.eps_list if e in by_eps]

    def decreasing(self, metric: str, t: float) -> bool:
        s = self.series(metric, t)
        return all(b < a for a, b in zip(s, s[1:]))

    def loglog_slope(self, metric: str, t: float) -> float:
        """Least-squares slope of log(metric) against log(eps)."""
        s = np.asarray(self.series(metric, t))
        e = np.asarray([x for x in self.eps_list if any(r.eps == x and abs(r.t - t) < 1e-12 for r in self.rows)])
        if s.size < 2 or np.any(s <= 0):
            return math.nan
        return float(np.polyfit(np.log(e), np.log(s), 1)[0])

    @property
    def required_metrics(self) -> tuple[str, ...]:
        if self.coupling == "elliptic":
            return ("err_X",)
        return ("err_X", "err_rho", "residual")

    def verdicts(self) -> dict[tuple[str, float], bool]:
        metrics = ("err_X", "err_rho", "err_c", "residual")
        return {(m, t): self.decreasing(m, t) for m in metrics for t in self.compare_times}

    @property
    def converged(self) -> bool:
        v = self.verdicts()
        return not self.aborted and all(v[(m, t)] for m in self.required_metrics for t in self.compare_times)

    def summary(self) -> str:
        lines = [f"convergence report ({self.coupling} coupling)",
                 f"eps list: {', '.join(f'{e:g}' for e in self.eps_list)}",
                 f"trait grid spacing hx = {self.hx:g}", ""]
        lines.append(f"{'eps':>8s} {'t':>6s} {'err_X':>11s} {'err_rho':>11s} {'err_c':>11s} "
                     f"{'width/sqrt':>11s} {'maxu_drift':>11s} {'residual':>11s}")
        for r in self.rows:
            lines.append(f"{r.eps:8g} {r.t:6g} {r.err_X:11.4e} {r.err_rho:11.4e} {r.err_c:11.4e} "
                         f"{r.width_ratio:11.4e} {r.maxu_drift:11.4e} {r.residual:11.4e}")
        lines += ["", "monotone decrease along the eps list:"]
        v = self.verdicts()
        for (m, t), ok in v.items():
            need = "required" if m in self.required_metrics else "reported"
            lines.append(f"  {m:<9s} t={t:<6g} {'yes' if ok else 'NO':<4s} ({need})")
        for t in self.compare_times:
            lines.append(f"observed log-log slope of err_X at t={t:g}: {self.loglog_slope('err_X', t):.3f}")
        if self.coupling == "elliptic":
            lines += ["", "note: the elliptic limit solver uses the pointwise product rho*c in the",
                      "stationary nutrient equation; the weak limit of rho_eps*c_eps need not factor",
                      "that way, so err_rho and err_c carry no monotonicity requirement here."]
            for t in self.compare_times:
                s = ", ".join(f"{x:.3e}" for x in self.series("err_rho", t))
                lines.append(f"  err_rho at t={t:g}: {s}")
        if self.aborted:
            lines += ["", "aborted runs:"]
            lines += [f"  {k}: {msg}" for k, msg in self.aborted.items()]
        lines += ["", f"overall: {'CONVERGED' if self.converged else 'NOT CONVERGED'}"]
        return "\n".join(lines) + "\n"


def _epsilon_job(scenario: Scenario, eps: float):
    try:
        return run_epsilon(scenario.params, scenario.init, scenario.grids, eps,
                           scenario.snapshot_times(), scenario.picard,
                           scenario.time_convention, scenario.forcing), None
    except RUNTIME_ERRORS as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _limit_job(scenario: Scenario):
    try:
        return run_limit(scenario.params, scenario.init, scenario.grids,
                         scenario.snapshot_times(), scenario.picard), None
    except RUNTIME_ERRORS as exc:
        return None, f"{type(exc).__name__}: {exc}"


def epsilon_trajectory(eps: float, y: np.ndarray, snapshots) -> Trajectory:
    return Trajectory(eps, np.array([m.t for _, m in snapshots]), y,
                      np.array([m.X_eps for _, m in snapshots]),
                      np.array([s.rho for s, _ in snapshots]),
                      np.array([s.c for s, _ in snapshots]),
                      np.array([m.width for _, m in snapshots]),
                      np.array([m.max_u for _, m in snapshots]),
                      np.array([m.constraint_residual for _, m in snapshots]))


def limit_trajectory(y: np.ndarray, run) -> Trajectory:
    snaps = run.snapshots
    return Trajectory(None, np.array([s.state.t for s in snaps]), y,
                      np.array([s.state.X for s in snaps]),
                      np.array([s.state.rho for s in snaps]),
                      np.array([s.state.c for s in snaps]))


def compare(limit: Trajectory, runs: list[Trajectory], scenario: Scenario) -> list[ReportRow]:
    rows = []
    for t in scenario.compare_times:
        kl = limit.at(t)
        for tr in runs:
            k = tr.at(t)
            rows.append(ReportRow(
                eps=tr.eps, t=t,
                err_X=float(np.max(np.abs(tr.X[k] - limit.X[kl]))),
                err_rho=float(np.max(np.abs(tr.rho[k] - limit.rho[kl]))),
                err_c=float(np.max(np.abs(tr.c[k] - limit.c[kl]))),
                width_ratio=float(np.max(tr.width[k]) / math.sqrt(tr.eps)),
                maxu_drift=float(np.max(np.abs(tr.max_u[k] - tr.max_u[0]))),
                residual=float(np.max(tr.residual[k])),
            ))
    return rows


def run_sweep(scenario: Scenario, threads: int = 1, out_dir: str | Path | None = None,
              plots: bool | None = None) -> ConvergenceReport:
    """Run the limit system once and the epsilon system per entry of the eps list.

    Runs may execute in parallel processes; results are placed by eps index,
    so the written files do not depend on ``threads``.  Aborted runs are
    listed in the report and left out of its rows.
    """
    grids = scenario.grids
    y = grids.y
    report = ConvergenceReport(scenario.params.coupling, scenario.eps_list,
                               scenario.compare_times, grids.hx)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            lim_future = pool.submit(_limit_job, scenario)
            futures = [pool.submit(_epsilon_job, scenario, e) for e in scenario.eps_list]
            eps_results = [f.result() for f in futures]
            lim_result = lim_future.result()
    else:
        lim_result = _limit_job(scenario)
        eps_results = [_epsilon_job(scenario, e) for e in scenario.eps_list]

    out = Path(out_dir) if out_dir is not None else None
    lim_run, lim_err = lim_result
    limit = None
    if lim_err:
        report.aborted["limit"] = lim_err
    else:
        limit = limit_trajectory(y, lim_run)
        report.trajectories.append(limit)
        if out is not None:
            write_limit_csv(out / "limit.csv", y, lim_run)

    runs = []
    for eps, (snaps, err) in zip(scenario.eps_list, eps_results):
        if err:
            report.aborted[f"eps={eps:g}"] = err
            continue
        tr = epsilon_trajectory(eps, y, snaps)
        runs.append(tr)
        report.trajectories.append(tr)
        if out is not None:
            write_epsilon_csv(out / eps_filename(eps), y, snaps)

    if limit is not None:
        report.rows = compare(limit, runs, scenario)
    if out is not None:
        write_report_csv(out / "report.csv", report)
        (out / "report.txt").write_text(report.summary())
        if scenario.plots if plots is None else plots:
            from .plots import emit_plots
            emit_plots(report, report.trajectories, out)
    return report
