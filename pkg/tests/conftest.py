import numpy as np
import pytest

from alefx import Dataset
from alefx.models import GeneratorSpec, generate_synthetic, parse_expression


def make_data(n, d, seed=0, corr=0.0):
    """Correlated Gaussian predictors named x1..xd."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, d))
    if corr:
        z[:, 1:] = corr * z[:, :1] + np.sqrt(1 - corr ** 2) * z[:, 1:]
    return Dataset([f"x{i + 1}" for i in range(d)], z)


@pytest.fixture
def data3():
    return make_data(300, 3, seed=1, corr=0.6)


@pytest.fixture
def example1():
    return generate_synthetic(GeneratorSpec("example1", n=200, seed=0))


@pytest.fixture
def expr():
    def build(text):
        return parse_expression(text)
    return build


ACCEPTANCE_LINES = []


def record_criterion(label, ok, detail=""):
    """Log one acceptance line; the summary hook prints them after the run."""
    line = f"{label}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
