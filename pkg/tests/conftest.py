import numpy as np
import pytest

from iqpgraph.circuit import build_shallow_ansatz


def random_circuit(n, rng, scale=np.pi):
    c = build_shallow_ansatz(n)
    return c.with_thetas(rng.uniform(-scale, scale, c.n_params))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import ACCEPTANCE_LINES
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
