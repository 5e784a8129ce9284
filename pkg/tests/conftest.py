import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# lines recorded by the acceptance suite, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_hermitian(rng, n, psd=False):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    if psd:
        h = z @ z.conj().T
        return h / np.trace(h).real
    return (z + z.conj().T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
