import math

import pytest

from memwalk.kernels import Exponential, HalfNormal, Lomax, StretchedExponential, Uniform

ALL_KERNELS = [
    Uniform(1.0),
    Uniform(2.5),
    HalfNormal(),
    Exponential(1.0),
    Exponential(3.0),
    StretchedExponential(0.5),
    StretchedExponential(0.25),
    StretchedExponential(2.0),
    Lomax(1.5),
    Lomax(1.25, scale=2.0),
    Lomax(2.0),
]


@pytest.fixture(params=ALL_KERNELS, ids=str)
def kernel(request):
    return request.param


def tail_horizon(k, eps=1e-12):
    """A time beyond which the tail mass is below ``eps``."""
    if math.isfinite(k.support_end):
        return k.support_end
    return k.inverse_survival(eps)


#: (criterion, passed, detail) lines collected by the acceptance suite
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
