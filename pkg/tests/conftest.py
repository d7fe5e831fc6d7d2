"""Shared fixtures plus a pass/fail summary line per acceptance criterion."""

import numpy as np
import pytest


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


@pytest.fixture
def small_frame(rng) -> np.ndarray:
    """A 24x32 integer-valued RGB frame, like 8-bit sensor data."""
    return rng.integers(0, 256, size=(24, 32, 3)).astype(np.float64)


_acceptance: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, outcome in sorted(_acceptance):
        word = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"  [{word}] {name}")
