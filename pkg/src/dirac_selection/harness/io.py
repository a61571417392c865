"""CSV writers and readers for run snapshots and the convergence report."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

EPS_COLUMNS = ("t", "y", "X_eps", "rho", "c", "max_u", "width", "constraint_residual", "strongconv_gap")
LIMIT_COLUMNS = ("t", "y", "X", "rho", "c", "uxx_at_X", "maxu_audit", "lipschitz_t", "lipschitz_y")
FIELD_COLUMNS = ("t", "y", "x", "u")
REPORT_COLUMNS = ("eps", "t", "err_X", "err_rho", "err_c", "width_ratio", "maxu_drift")


def eps_filename(eps: float) -> str:
    return f"eps_{eps:g}.csv"


def _write(path: Path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
    return path


def write_epsilon_csv(path: Path, y: np.ndarray, snapshots) -> Path:
    def rows():
        for state, m in snapshots:
            for j in range(y.size):
                yield (m.t, y[j], m.X_eps[j], state.rho[j], state.c[j], m.max_u[j], m.width[j],
                       m.constraint_residual[j], m.strongconv_gap[j])
    return _write(path, EPS_COLUMNS, rows())


def write_fields_csv(path: Path, y: np.ndarray, x: np.ndarray, snapshots) -> Path:
    def rows():
        for state, m in snapshots:
            for j in range(y.size):
                for i in range(x.size):
                    yield (m.t, y[j], x[i], state.u[j, i])
    return _write(path, FIELD_COLUMNS, rows())


def write_limit_csv(path: Path, y: np.ndarray, run) -> Path:
    def rows():
        for s in run.snapshots:
            st = s.state
            for j in range(y.size):
                yield (st.t, y[j], st.X[j], st.rho[j], st.c[j], s.uxx[j], s.maxu_audit[j],
                       s.lipschitz_t[j], s.lipschitz_y[j])
    return _write(path, LIMIT_COLUMNS, rows())


def write_report_csv(path: Path, report) -> Path:
    return _write(path, REPORT_COLUMNS,
                  ((r.eps, r.t, r.err_X, r.err_rho, r.err_c, r.width_ratio, r.maxu_drift)
                   for r in report.rows))


def read_csv(path: Path) -> dict[str, np.ndarray]:
    """Column name -> float array."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        data = np.array([[float(v) for v in row] for row in rd], dtype=float)
    if data.size == 0:
        return {h: np.empty(0) for h in header}
    return {h: data[:, k] for k, h in enumerate(header)}
