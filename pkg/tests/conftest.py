import math

import pytest

from prpqkd._backend import available_backends, load_backend
from prpqkd.model import SourceModel, ThresholdPolicy, preset_fig3_homodyne


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_record():
    """Collects one verdict line per acceptance criterion for the terminal summary."""
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(params=available_backends())
def backend(request):
    return load_backend(request.param)


@pytest.fixture
def fig3_det():
    return preset_fig3_homodyne()


@pytest.fixture
def fig3_source():
    """Working point of the error-rate figure: delta = pi/6, mu_s = 0.3."""
    return SourceModel(0.3, math.pi / 6)


@pytest.fixture
def xth2():
    return ThresholdPolicy(2.0)
