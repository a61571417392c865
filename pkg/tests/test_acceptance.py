"""Acceptance gate: one test per criterion, each printing a pass/fail line.

The lines are collected in ``conftest.ACCEPTANCE_LINES`` and shown in the
terminal summary.
"""
import math
import time

import numpy as np
import pytest

import conftest
from dirac_selection.epsilon_solver import run_epsilon
from dirac_selection.harness import cli, io
from dirac_selection.harness.config import load_config
from dirac_selection.harness.sweep import run_sweep
from dirac_selection.limit_solver import run_limit
from dirac_selection.numerics import Grids
from dirac_selection.nutrient import solve_c_elliptic
from test_nutrient import manufactured_error, orders

# oracles.zero_d_epsilon() and oracles.zero_d_limit() at X0=0.35, T=1
ZERO_D_EPS = (0.4216279394232662, 5.859554315711673, 2.3093921423793375)
ZERO_D_LIMIT = (0.4216674958237224, 5.8676660832632725, 2.307989243981839)


def record(n, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} | {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def default_scenario():
    return load_config("configs/default.json")


@pytest.fixture(scope="module")
def cli_sweeps(tmp_path_factory):
    """Two ``sim sweep`` runs of the default config: one serial, one with 4 workers."""
    dirs = []
    for threads in (1, 4):
        out = tmp_path_factory.mktemp(f"sweep_t{threads}")
        assert cli.main(["sweep", "configs/default.json", "--out", str(out), "--threads", str(threads)]) == 0
        dirs.append(out)
    return dirs


def test_criterion_1_a_priori_bounds(default_scenario):
    sc = default_scenario
    start = time.perf_counter()
    snaps = run_epsilon(sc.params, sc.init, sc.grids, 0.05, sc.snapshot_times())
    elapsed = time.perf_counter() - start
    flagged = sum(m.bound_violations for _, m in snaps)
    worst = max(m.worst_violation for _, m in snaps)
    ok = flagged == 0 and elapsed < 60.0
    assert record(1, "a priori bounds at every snapshot", ok,
                  f"{len(snaps)} snapshots, violations={flagged}, worst excess={worst:.2e}, "
                  f"runtime={elapsed:.1f}s (<60s)")


def test_criterion_2_concentration(default_scenario):
    sc = default_scenario
    ratios, maxu_ok, worst_margin = [], True, math.inf
    for eps in (0.1, 0.05, 0.025):
        snaps = run_epsilon(sc.params, sc.init, sc.grids, eps, sc.snapshot_times())
        final = next(m for _, m in snaps if abs(m.t - 1.0) < 1e-12)
        ratios.append(final.width / math.sqrt(eps))
        u0_max = np.abs(snaps[0][1].max_u)
        for _, m in snaps:
            margin = 2 * eps * abs(math.log(eps)) + u0_max - np.abs(m.max_u)
            worst_margin = min(worst_margin, float(margin.min()))
            maxu_ok &= bool(np.all(margin >= 0))
    ratios = np.array(ratios)
    band = float(np.max(ratios.max(axis=0) / ratios.min(axis=0)))
    ok = band <= 1.5 and maxu_ok
    assert record(2, "width/sqrt(eps) band and max-u bound", ok,
                  f"band factor={band:.4f} (<=1.5), width/sqrt(eps) in [{ratios.min():.4f}, {ratios.max():.4f}], "
                  f"min max-u margin={worst_margin:.3e} (>=0)")


def test_criterion_3_convergence_to_limit(cli_sweeps, default_scenario):
    table = io.read_csv(cli_sweeps[0] / "report.csv")
    at_T = np.abs(table["t"] - 1.0) < 1e-12
    eps = table["eps"][at_T]
    err_X, err_rho = table["err_X"][at_T], table["err_rho"][at_T]
    assert list(eps) == list(default_scenario.eps_list)
    # residual is not part of the csv columns; the report text carries the verdicts
    text = (cli_sweeps[0] / "report.txt").read_text()
    residual_ok = all(f"residual  t={t:<6g} yes" in text for t in default_scenario.compare_times)
    dec = lambda s: bool(np.all(np.diff(s) < 0))
    hx = default_scenario.grids.hx
    ok = dec(err_X) and dec(err_rho) and err_X[-1] < 2 * hx and residual_ok
    assert record(3, "epsilon runs converge to the limit system", ok,
                  f"err_X(t=1)={', '.join(f'{v:.2e}' for v in err_X)}; "
                  f"err_rho(t=1)={', '.join(f'{v:.2e}' for v in err_rho)}; "
                  f"err_X(eps=0.0125)={err_X[-1]:.2e} < 2hx={2 * hx:g}; residual decreasing={residual_ok}")


def _richardson(params_scenario, dts, Ny=101):
    sc = params_scenario
    finals = []
    for dt in dts:
        g = Grids(sc.grids.L, Ny, sc.grids.Nx, dt, 1.0)
        finals.append(run_limit(sc.params, sc.init, g, [1.0]).snapshots[-1].state.X)
    diffs = [np.max(np.abs(a - b)) for a, b in zip(finals, finals[1:])]
    return orders(diffs)


def test_criterion_4_limit_self_consistency(default_scenario):
    sc = default_scenario
    run = run_limit(sc.params, sc.init, sc.grids, sc.snapshot_times())
    audit = max(float(np.max(np.abs(s.maxu_audit))) for s in run.snapshots)
    audit_tol = 5 * sc.grids.dt * sc.grids.T_final
    dts = (0.02, 0.01, 0.005, 0.0025)
    rich = _richardson(load_config("configs/elliptic.json"), dts)
    rich_parabolic = _richardson(sc, dts)
    ok = (run.max_constraint_rel <= 1e-12 and audit <= audit_tol and run.max_xdot_form_gap <= 1e-12
          and all(abs(p - 2.0) <= 0.3 for p in rich))
    assert record(4, "limit solver self-consistency", ok,
                  f"constraint rel={run.max_constraint_rel:.1e}, max-u audit={audit:.1e} (<={audit_tol:g}), "
                  f"x_dot form gap={run.max_xdot_form_gap:.1e}, "
                  f"Richardson order on X(T) elliptic={', '.join(f'{p:.2f}' for p in rich)} "
                  f"[parabolic, first-order nutrient step, reported only: "
                  f"{', '.join(f'{p:.2f}' for p in rich_parabolic)}]")


def test_criterion_5_zero_d_oracle():
    sc = load_config("configs/homogeneous.json")
    g = Grids(sc.grids.L, sc.grids.Ny, sc.grids.Nx, 1e-3, 1.0)
    (s, m), = run_epsilon(sc.params, sc.init, g, 0.05, [1.0])
    lim = run_limit(sc.params, sc.init, g, [1.0]).snapshots[-1].state
    err_eps = max(np.max(np.abs(v - ref)) for v, ref in zip((m.X_eps, s.rho, s.c), ZERO_D_EPS))
    err_lim = max(np.max(np.abs(v - ref)) for v, ref in zip((lim.X, lim.rho, lim.c), ZERO_D_LIMIT))
    ok = err_eps <= 1e-4 and err_lim <= 1e-4
    assert record(5, "y-homogeneous runs match the 0-D reference", ok,
                  f"epsilon solver max|err|={err_eps:.2e}, limit solver max|err|={err_lim:.2e} (<=1e-4)")


def test_criterion_6_nutrient_orders():
    params = conftest.default_params()
    space = orders([manufactured_error(params, n, 2e-5, 0.2) for n in (11, 21, 41)])
    time_ = orders([manufactured_error(params, 1001, dt, 1.0) for dt in (0.1, 0.05, 0.025, 0.0125)])
    g = Grids(Ny=61)
    rho = 3.0 + np.sin(g.y)
    n, h = g.Ny, g.hy
    A = (np.diag(2 / h ** 2 + rho + params.lam) - np.diag(np.full(n - 1, 1 / h ** 2), 1)
         - np.diag(np.full(n - 1, 1 / h ** 2), -1))
    A[0, 1] = A[-1, -2] = -2 / h ** 2
    dense_gap = float(np.max(np.abs(solve_c_elliptic(rho, params, g)
                                    - np.linalg.solve(A, np.full(n, params.lam * params.c_B)))))
    rho_bar = 2.5
    const = solve_c_elliptic(np.full(n, rho_bar), params, g)
    const_gap = float(np.max(np.abs(const - params.lam * params.c_B / (params.lam + rho_bar))))
    ok = (all(abs(p - 2.0) <= 0.2 for p in space) and all(abs(p - 1.0) <= 0.2 for p in time_)
          and dense_gap <= 1e-8 and const_gap <= 1e-12)
    assert record(6, "nutrient solver orders and elliptic oracle", ok,
                  f"space orders={', '.join(f'{p:.2f}' for p in space)}, "
                  f"time orders={', '.join(f'{p:.2f}' for p in time_)}, dense gap={dense_gap:.1e}, "
                  f"constant-solution gap={const_gap:.1e}")


def test_criterion_7_elliptic_sweep():
    sc = load_config("configs/elliptic.json")
    report = run_sweep(sc, out_dir=None, plots=False)
    err_X = report.series("err_X", 1.0)
    ok = all(report.decreasing("err_X", t) for t in sc.compare_times) and not report.aborted
    noted = "weak limit" in report.summary()
    assert record(7, "elliptic coupling sweep", ok and noted,
                  f"err_X(t=1)={', '.join(f'{v:.2e}' for v in err_X)}; "
                  f"err_rho(t=1)={', '.join(f'{v:.2e}' for v in report.series('err_rho', 1.0))} "
                  f"(reported only); weak-limit note present={noted}")


def test_criterion_8_determinism(cli_sweeps):
    a, b = ((d / "report.csv").read_bytes() for d in cli_sweeps)
    ok = a == b
    assert record(8, "byte-identical report.csv across sim sweep runs", ok,
                  f"threads 1 vs 4, {len(a)} bytes, identical={ok}")
