import numpy as np
import pytest

from levycredit import LevyModel, PiEvaluator, RngStream

# Reference values computed once with mpmath at 40 digits (independent of
# scipy.integrate and of the package's own quadrature); see test docstrings.
VG_MU_POS = 0.3404474623543901546561822224828269
VG_MU_NEG = 0.3304474623543901546561822224828269
VG_NU_POS = 0.01159044746235439015465618222248283
VG_NU_NEG = 0.01091955253764560984534381777751717
VG_DENSITY_AT_0_1 = 4.849960306144195755618946222916512
VG_PI = {
    0.0: 0.3251050598100153910822597200766474,
    0.01: 0.1510497301817340663161837714108685,
    0.0585: 0.01635169293716886851674912037457290,
    0.1: 0.003313574652231538931558888901224282,
    0.5: 5.050452014857909511818984575312329e-09,
}
GAMMA11_PI_AT_HALF = 0.1980706356883850763823333207669443


@pytest.fixture
def vg_ref():
    return LevyModel.vg(-0.02, 0.1, 0.15, 0.01)


@pytest.fixture
def dcp_unit():
    return LevyModel.dcp(1.0, 1.0, 1.0)


@pytest.fixture
def dcp_neg():
    return LevyModel.dcp(-0.02, 1.0, 1.0)


@pytest.fixture
def rng():
    return RngStream(987654321)


def all_families():
    return [
        LevyModel.dcp(1.0, 1.0, 1.0),
        LevyModel.dcp(-0.5, 2.0, 3.0, rho_pos=1.0, beta_pos=2.0),
        LevyModel.dgamma(0.3, 1.0, 1.0),
        LevyModel.dgamma(-0.1, 0.4, 0.05),
        LevyModel.vg(-0.02, 0.1, 0.15, 0.01),
    ]


# One line per acceptance criterion, printed after the run regardless of capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
