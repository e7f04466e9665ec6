import numpy as np
import pytest

from discpool.datasets import make_random_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_dataset():
    return make_random_dataset(shape=(4, 4), channels=3, n_samples=60, n_classes=3, seed=7)


def random_spd(rng, n, rank=None, scale=1.0):
    """Random symmetric PSD matrix of the given rank (full rank by default)."""
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank)) * scale
    return g @ g.T


_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        _ACCEPTANCE.extend(v for k, v in report.user_properties if k == "acceptance")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
