import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from igi.stream import MeasurementStream  # noqa: E402

_CRITERIA = []


@pytest.fixture
def record_criterion():
    """Collect one pass/fail line per acceptance criterion for the terminal summary."""

    def record(name, passed, detail=""):
        _CRITERIA.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def tiny_stream():
    """Single pixel, (S, I) = (1, 2), (3, 4), (2, 1)."""
    return MeasurementStream(np.array([1.0, 3.0, 2.0]), np.array([2.0, 4.0, 1.0]).reshape(3, 1, 1))
