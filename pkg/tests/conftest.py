import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def dim_grade(draw, n_min=1, n_max=4, k_min=0):
    n = draw(st.integers(n_min, n_max))
    k = draw(st.integers(min(k_min, n), n))
    return n, k


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[crit])
