import pytest

from frpsim import kernels
from frpsim.rng import RandomSource

ACCEPTANCE_RESULTS = []


@pytest.fixture
def src():
    return RandomSource.seeded(20240601)


@pytest.fixture(params=sorted(kernels.backends()))
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, seconds in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(
            f"{status}  criterion {number}: {name} ({seconds:.2f}s, kernels={kernels.BACKEND})")
