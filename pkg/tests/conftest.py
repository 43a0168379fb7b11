import numpy as np
import pytest

from bagrisk.spectrum import make_ar1, make_isotropic, make_isotropic_signal


@pytest.fixture(scope="session")
def iso_H():
    return make_isotropic(1.0)


@pytest.fixture(scope="session")
def iso_G():
    return make_isotropic_signal(1.0, rho_sq=1.0, sigma_sq=1.0)


@pytest.fixture(scope="session")
def ar1_spectra():
    # small enough to keep eigendecompositions cheap in unit tests
    return make_ar1(0.25, 200)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


# collected by the acceptance tests; replayed after the run so the verdict
# lines survive pytest's output capture
ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance summary")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
