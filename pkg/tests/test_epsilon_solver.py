import logging

import numpy as np
import pytest

from dirac_selection.epsilon_solver import (SimulationAbort, bound_violations, init_state, run_epsilon,
                                            step, step_u)
from dirac_selection.model import ModelError, ProfileSpec
from dirac_selection.numerics import Grids, refine_argmax, stabilized_exp_mass

from conftest import default_init, default_params

# oracles.zero_d_epsilon(X0=0.35, sigma=0.05, eps=0.05, T=1): DOP853 + adaptive quadrature
ZERO_D_EPS = (0.4216279394232662, 5.859554315711673, 2.3093921423793375)


def test_init_mass_matches_rho0(params, init):
    g = Grids(Ny=21)
    s = init_state(params, init, g, 0.05)
    _, rho0, _ = init.profiles(g.y, params)
    assert np.max(np.abs(s.rho / rho0 - 1)) < 1e-3


def test_init_too_coarse_raises(params, init, caplog):
    g = Grids(Ny=3, Nx=11)
    with caplog.at_level(logging.WARNING), pytest.raises(ModelError, match="refine"):
        init_state(params, init, g, 1e-4)
    assert "trait width" in caplog.text


def test_step_u_is_explicit_update(params, init):
    g = Grids(Ny=11, Nx=51)
    s = init_state(params, init, g, 0.1)
    dt = 0.01
    u, rho = step_u(s, params, g, dt)
    rate = params.r(g.x)[None, :] * s.c[:, None] - params.d(g.x)[None, :] * (1 + s.rho)[:, None]
    assert np.array_equal(u, s.u + dt * rate)
    assert np.allclose(rho, stabilized_exp_mass(u, 0.1, g.hx), rtol=1e-14)
    u_raw, _ = step_u(s, params, g, dt, time_convention="raw")
    assert np.allclose(u_raw - s.u, 0.1 * (u - s.u), rtol=1e-12, atol=1e-15)


def test_max_u_changes_at_second_order_in_the_step(params, init):
    # the growth rate vanishes at the maximum at t=0, so the peak moves by O(dt^2)
    g = Grids(Ny=11, Nx=201)
    s = init_state(params, init, g, 0.05)
    m0 = refine_argmax(s.u, g.hx)[1]
    changes = []
    for dt in (0.02, 0.01, 0.005):
        u, _ = step_u(s, params, g, dt)
        changes.append(np.max(np.abs(refine_argmax(u, g.hx)[1] - m0)))
    ratios = [a / b for a, b in zip(changes, changes[1:])]
    assert all(r > 3.0 for r in ratios), ratios


def test_concavity_strengthens(params, init):
    g = Grids(Ny=11, Nx=201, dt=1e-2, T_final=1.0)
    snaps = run_epsilon(params, init, g, 0.05, [0.0, 0.5, 1.0])
    uxx = [m.uxx for _, m in snaps]
    assert np.all(uxx[1] < uxx[0]) and np.all(uxx[2] < uxx[1])


def test_mirror_symmetric_data_stays_symmetric(params):
    init = default_init(X0=ProfileSpec("bump", base=0.4, amplitude=0.2, scale=1.0))
    g = Grids(Ny=21, Nx=101, dt=1e-2, T_final=0.3)
    (s, m), = run_epsilon(params, init, g, 0.05, [0.3])
    assert np.allclose(s.c, s.c[::-1], rtol=0, atol=1e-10)
    assert np.allclose(m.X_eps, m.X_eps[::-1], rtol=0, atol=1e-10)


def test_homogeneous_run_matches_zero_d_oracle(params):
    init = default_init(X0=ProfileSpec("constant", value=0.35))
    g = Grids(Ny=1, Nx=201, dt=1e-3, T_final=1.0)
    (s, m), = run_epsilon(params, init, g, 0.05, [1.0])
    X, rho, c = ZERO_D_EPS
    assert abs(m.X_eps[0] - X) < 1e-6
    assert abs(s.rho[0] - rho) / rho < 1e-4
    assert abs(s.c[0] - c) / c < 1e-4


def test_width_tracks_sqrt_eps(params, init):
    g = Grids(Ny=11, Nx=201, dt=1e-3, T_final=0.5)
    ratios = []
    for eps in (0.1, 0.05, 0.025):
        (_, m), = run_epsilon(params, init, g, eps, [0.5])
        ratios.append(m.width / np.sqrt(eps))
    ratios = np.array(ratios)
    assert np.all(ratios > 0) and np.ptp(ratios) / ratios.mean() < 0.05


def test_strong_convergence_gap_shrinks_with_eps(params, init):
    # the lagged density makes the step stiff like 1/eps: keep dt well below eps
    g = Grids(Ny=11, Nx=201, dt=1e-3, T_final=0.5)
    gaps = []
    for eps in (0.1, 0.05, 0.025):
        (_, m), = run_epsilon(params, init, g, eps, [0.5])
        gaps.append(m.strongconv_gap.max())
    assert gaps[0] > gaps[1] > gaps[2]


def test_default_run_has_no_bound_violations(params, init):
    g = Grids(Ny=21, Nx=201, dt=1e-2, T_final=1.0)
    snaps = run_epsilon(params, init, g, 0.05, [0.0, 0.5, 1.0])
    assert sum(m.bound_violations for _, m in snaps) == 0


def test_bound_violations_counts(params):
    c = np.array([params.c_B + 1.0, 2.0, -1.0])
    rho = np.array([params.rho_M + 1.0, 5.0, 5.0])
    counts, worst = bound_violations(c, rho, params)
    assert counts["c <= c_B"] == 1 and counts["c >= 0"] == 1 and counts["rho <= rho_M"] == 1
    assert worst == pytest.approx(params.c_m + 1.0 - 1e-3)  # minus the bound slack


def test_non_finite_potential_aborts(params, init):
    g = Grids(Ny=5, Nx=51)
    s = init_state(params, init, g, 0.1)
    s.c[2] = np.inf
    with pytest.raises(SimulationAbort, match="y=") as exc:
        step(s, params, g)
    assert exc.value.t == 0.0


def test_unknown_time_convention(params, init):
    with pytest.raises(ValueError):
        run_epsilon(params, init, Grids(Ny=3, dt=0.5), 0.1, [0.5], time_convention="fast")
