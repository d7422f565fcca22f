import os

import pytest
from hypothesis import settings

from kerr_omit.params import derive, reference_params
from kerr_omit.steady import solve_steady_state

settings.register_profile("default", deadline=None, max_examples=60)
settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def ref_derived():
    return derive(reference_params())


@pytest.fixture(scope="session")
def ref_steady(ref_derived):
    return solve_steady_state(ref_derived)


@pytest.fixture
def bare_cavity():
    """g = 0, U = 0 cavity at Delta_c = 0 built from the reference set."""
    d = derive(reference_params(detuning_over_omega_m=0.0))
    return d.replace(g=0.0, kerr=0.0)


def pytest_terminal_summary(terminalreporter):
    module = terminalreporter.config.pluginmanager.get_plugin("tests.test_acceptance")
    if module is None:
        import sys

        module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "LINES", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(lines):
        terminalreporter.write_line(lines[number])
