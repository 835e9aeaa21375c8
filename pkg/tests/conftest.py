import numpy as np
import pytest

from metashield.geometry import Scene
from metashield.resonator import calibrate


@pytest.fixture
def calibrated_spec():
    return calibrate(73, 500, 200, 779)


@pytest.fixture
def gooseneck():
    return Scene(origin=(0.0, 0.0, 0.0), r1=10.0, mic_kind="gooseneck", d_cm=20.0, h_cm=0.0)


@pytest.fixture
def handheld():
    return Scene(origin=(0.0, 0.0, 0.0), r1=10.0, mic_kind="handheld", d_cm=20.0, h_cm=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def report_line(request):
    """Print one pass/fail line and keep it for the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def emit(number, title, checks, elapsed_s):
        ok = all(passed for _, passed, _ in checks)
        detail = "; ".join(f"{name}={'ok' if passed else 'FAIL'} ({info})"
                           for name, passed, info in checks)
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title} in {elapsed_s:.2f}s: {detail}"
        print(line)
        lines.append((number, line))
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
