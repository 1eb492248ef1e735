import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from randers_cut.surfaces import ProfileSpec

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion number -> (passed, message); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {msg}")


def decreasing_curvature_profile() -> ProfileSpec:
    """Tabulated ``sin r / sqrt(1 + sin^2 r / 2)``; its curvature falls from pole to equator."""
    r = np.linspace(0, math.pi, 801)
    m = np.sin(r) / np.sqrt(1 + 0.5 * np.sin(r) ** 2)
    m[0] = m[-1] = 0.0
    return ProfileSpec.custom(np.column_stack([r, m]))


@pytest.fixture(scope="session")
def decreasing_profile():
    return decreasing_curvature_profile()
