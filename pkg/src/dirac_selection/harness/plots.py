"""SVG figures for a sweep."""
from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np

from .io import read_csv
from .sweep import ConvergenceReport, ReportRow, Trajectory

logger = logging.getLogger(__name__)

PLOT_FILES = ("trait_profiles.svg", "err_X_vs_eps.svg", "width_ratio_vs_eps.svg", "nutrient_profiles.svg")


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "dirac-selection"
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def emit_plots(report: ConvergenceReport, trajectories: list[Trajectory], out_dir: str | Path) -> list[Path]:
    """Write the four sweep figures; returns the paths written.

    Nothing is written (and a notice is logged) when there are no
    trajectories.
    """
    if not trajectories:
        logger.warning("no trajectories: plots skipped")
        return []
    plt = _pyplot()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t_last = max(report.compare_times) if report.compare_times else float(trajectories[0].t[-1])
    written = []

    for fname, attr, ylabel in (("trait_profiles.svg", "X", "dominant trait X(y)"),
                                ("nutrient_profiles.svg", "c", "nutrient c(y)")):
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for tr in trajectories:
            for t in report.compare_times or (t_last,):
                try:
                    k = tr.at(t)
                except KeyError:
                    continue
                style = "k-" if tr.eps is None else "--"
                ax.plot(tr.y, getattr(tr, attr)[k], style, lw=1.2, label=f"{tr.label}, t={t:g}")
        ax.set_xlabel("y")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=7)
        fig.tight_layout()
        written.append(_save(fig, out / fname))
        plt.close(fig)

    eps = np.array(report.eps_list, dtype=float)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    captions = []
    for t in report.compare_times:
        s = np.array(report.series("err_X", t))
        if s.size == 0:
            continue
        ax.loglog(eps[: s.size], s, "o-", label=f"t={t:g}")
        captions.append(f"t={t:g}: slope {report.loglog_slope('err_X', t):.2f}")
    ax.set_xlabel("eps")
    ax.set_ylabel("max_y |X_eps - X|")
    ax.set_title("err_X vs eps (least-squares " + "; ".join(captions) + ")", fontsize=8)
    ax.legend(fontsize=7)
    fig.tight_layout()
    written.append(_save(fig, out / "err_X_vs_eps.svg"))
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for t in report.compare_times:
        s = np.array(report.series("width_ratio", t))
        if s.size:
            ax.semilogx(eps[: s.size], s, "s-", label=f"t={t:g}")
    ax.set_xlabel("eps")
    ax.set_ylabel("max_y width / sqrt(eps)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    written.append(_save(fig, out / "width_ratio_vs_eps.svg"))
    plt.close(fig)
    return written


def load_report_dir(path: str | Path) -> tuple[ConvergenceReport, list[Trajectory]]:
    """Rebuild a report and trajectories from the files a sweep wrote."""
    path = Path(path)
    table = read_csv(path / "report.csv")
    coupling = "parabolic"
    txt = path / "report.txt"
    if txt.exists() and "elliptic" in txt.read_text().splitlines()[0]:
        coupling = "elliptic"
    eps_list = tuple(dict.fromkeys(table["eps"].tolist()))
    times = tuple(dict.fromkeys(table["t"].tolist()))
    rows = [ReportRow(table["eps"][k], table["t"][k], table["err_X"][k], table["err_rho"][k],
                      table["err_c"][k], table["width_ratio"][k], table["maxu_drift"][k], math.nan)
            for k in range(table["eps"].size)]
    trajectories = []
    files = [(None, path / "limit.csv")] + [(e, path / f"eps_{e:g}.csv") for e in eps_list]
    hx = math.nan
    for eps, f in files:
        if not f.exists():
            continue
        d = read_csv(f)
        ts = np.unique(d["t"])
        ny = int(np.count_nonzero(d["t"] == ts[0]))
        shape = (ts.size, ny)
        xcol = "X" if eps is None else "X_eps"
        trajectories.append(Trajectory(eps, ts, d["y"][:ny], d[xcol].reshape(shape),
                                       d["rho"].reshape(shape), d["c"].reshape(shape)))
    report = ConvergenceReport(coupling, eps_list, times, hx, rows)
    report.trajectories = trajectories
    return report, trajectories
