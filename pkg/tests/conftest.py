import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ckytool", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("ckytool")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
