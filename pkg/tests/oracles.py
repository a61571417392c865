"""Independent reference computations used to freeze expected test values.

Nothing here imports the package: coefficients are plain lambdas and the
integrators/quadratures come from scipy.  Running this file prints the
values frozen in the tests.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad, solve_ivp, trapezoid

# default scenario coefficients
LAM, C_B = 8.0, 4.0


def r(x):
    return 3.0 - (x - 0.5) ** 2


def d(x):
    return 1.0 + (x - 0.5) ** 2


def r1(x):
    return -2.0 * (x - 0.5)


def d1(x):
    return 2.0 * (x - 0.5)


def dense_scan_bounds(rf=r, df=d, lam=LAM, c_B=C_B, n=10_001):
    xs = np.linspace(0.0, 1.0, n)
    q = rf(xs) / df(xs)
    rho_M = c_B * q.max() - 1.0
    c_m = c_B * lam / (lam + rho_M)
    rho_m = c_m * q.min() - 1.0
    return rho_m, rho_M, c_m


def equilibrium_c(X):
    q = r(X) / d(X)
    return (-(LAM - 1) + math.sqrt((LAM - 1) ** 2 + 4 * q * LAM * C_B)) / (2 * q)


def gaussian_reference(var=0.01, n=100_001):
    xs = np.linspace(0.0, 1.0, n)
    f = np.exp(-(xs - 0.5) ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)
    return trapezoid(f, xs)


def laplace_mass(rho0, sigma, eps, X0=0.5):
    shift = eps * math.log(rho0 / math.sqrt(2 * math.pi * eps * sigma))
    f = lambda x: math.exp((-(x - X0) ** 2 / (2 * sigma) + shift) / eps)
    return quad(f, 0.0, 1.0, points=[X0], epsabs=0, epsrel=1e-13, limit=200)[0]


def zero_d_epsilon(X0=0.35, sigma=0.05, eps=0.05, T=1.0):
    """Well-mixed epsilon system reduced to (int c, int rho, c).

    The potential stays ``u0_eps(x) + r(x) C - d(x) (t + P)``; the density is
    its exponential mass computed by adaptive quadrature.
    """
    c0 = equilibrium_c(X0)
    rho0 = r(X0) * c0 / d(X0) - 1.0
    shift = eps * math.log(rho0 / math.sqrt(2 * math.pi * eps * sigma))

    def u(x, t, C, P):
        return -(x - X0) ** 2 / (2 * sigma) + shift + r(x) * C - d(x) * (t + P)

    def peak(t, C, P):
        # u is quadratic in x: a x^2 + b x + const
        a = -1 / (2 * sigma) - C - (t + P)
        b = X0 / sigma + C + (t + P)
        return min(max(-b / (2 * a), 0.0), 1.0)

    def mass(t, C, P):
        Xp = peak(t, C, P)
        up = u(Xp, t, C, P)
        f = lambda x: math.exp((u(x, t, C, P) - up) / eps)
        return math.exp(up / eps) * quad(f, 0, 1, points=[Xp], epsabs=0, epsrel=1e-13, limit=200)[0]

    def rhs(t, s):
        C, P, c = s
        rho = mass(t, C, P)
        return [c, rho, LAM * C_B - (rho + LAM) * c]

    sol = solve_ivp(rhs, (0, T), [0.0, 0.0, c0], method="DOP853", rtol=1e-11, atol=1e-13)
    C, P, c = sol.y[:, -1]
    return peak(T, C, P), mass(T, C, P), c


def zero_d_limit(X0=0.35, sigma=0.05, T=1.0):
    """Well-mixed limit system in (X, c, int c, int rho)."""
    c0 = equilibrium_c(X0)

    def rhs(t, s):
        X, c, C, P = s
        rho = r(X) * c / d(X) - 1.0
        uxx = -1 / sigma - 2 * C - 2 * (t + P)
        xdot = (r1(X) - d1(X) * r(X) / d(X)) * c / (-uxx)
        return [xdot, LAM * C_B - (rho + LAM) * c, c, rho]

    sol = solve_ivp(rhs, (0, T), [X0, c0, 0.0, 0.0], method="DOP853", rtol=1e-12, atol=1e-14)
    X, c, C, P = sol.y[:, -1]
    return X, r(X) * c / d(X) - 1.0, c


if __name__ == "__main__":
    print("dense scan bounds", dense_scan_bounds())
    print("gaussian reference", repr(gaussian_reference()))
    print("laplace mass rho0=1 sigma=0.05 eps=0.01", repr(laplace_mass(1.0, 0.05, 0.01)))
    print("laplace mass rho0=1 sigma=0.05 eps=0.05", repr(laplace_mass(1.0, 0.05, 0.05)))
    print("0-D epsilon", zero_d_epsilon())
    print("0-D limit", zero_d_limit())
