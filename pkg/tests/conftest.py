import numpy as np
import pytest

from qfcs.model import MfimParams, domain_wall_operator, exact_distribution, prepare_state

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def reference():
    """The L=12, J=h_x=h_z=t=1 reference state evolved from |0...0>."""
    params = MfimParams()
    state = prepare_state(params)
    op = domain_wall_operator(params.L)
    return params, state, op, exact_distribution(state, op)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def report():
    def _report(label, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] {label}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
