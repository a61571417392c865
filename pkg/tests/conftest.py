import pytest

from dirac_selection.model import Coefficient, InitialData, ModelParams, ProfileSpec
from dirac_selection.numerics import Grids

ACCEPTANCE_LINES: list[str] = []


def default_params(coupling="parabolic"):
    return ModelParams(8.0, 4.0, Coefficient.concave_r(3.0, 1.0, 0.5),
                       Coefficient.convex_d(1.0, 1.0, 0.5), coupling)


def default_init(**kw):
    X0 = kw.pop("X0", ProfileSpec("tanh", base=0.5, amplitude=0.2, scale=1.0))
    return InitialData(X0, kw.pop("sigma0", 0.05), **kw)


@pytest.fixture
def params():
    return default_params()


@pytest.fixture
def init():
    return default_init()


@pytest.fixture
def small_grids():
    return Grids(L=5.0, Ny=41, Nx=201, dt=2e-3, T_final=0.2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
