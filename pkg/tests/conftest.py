import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gmmbounds import Dataset, DgpSpec, simulate_dataset

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def design_data():
    """One sample from the regression design (n = 1000)."""
    return simulate_dataset(DgpSpec(n=1000, seed=3))


def random_linear_dataset(rng, n, p=0.8):
    s = (rng.uniform(size=n) < p).astype(np.int8)
    x = rng.uniform(0, 1, n)
    y = rng.uniform(-0.5, 0.5) + rng.uniform(0, 2) * x + rng.uniform(-1, 1, n)
    return Dataset(s, y[:, None], x[:, None])


ACCEPTANCE_LINES = []


def record(label: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'} [{label}] {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
