import os
import shutil
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

ROOT = Path(__file__).resolve().parent.parent
PROGRAMS = ROOT / "programs"

settings.register_profile("default", max_examples=150, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def solver_command():
    """argv of the external solver, from MVR_SMT_SOLVER or a z3 on PATH."""
    env = os.environ.get("MVR_SMT_SOLVER")
    if env:
        return env.split()
    found = shutil.which("z3")
    return [found] if found else None


@pytest.fixture(scope="session")
def solver():
    cmd = solver_command()
    if cmd is None:
        pytest.skip("no external SMT solver available")
    return cmd


def program(rel: str) -> Path:
    return PROGRAMS / rel


def read_program(rel: str) -> str:
    return program(rel).read_text()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
