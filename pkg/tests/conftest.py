import pytest

from threewell import preset
from threewell.harness import Policy, simulate

_ACCEPTANCE = []
_RUNS = {}


def preset_run(name: str, solver: str = "grid_1d", **overrides):
    """Default-policy run of a preset, shared across the session."""
    key = (name, solver, tuple(sorted(overrides.items())))
    if key not in _RUNS:
        _RUNS[key] = simulate(preset(name, **overrides), Policy(solver))
    return _RUNS[key]


@pytest.fixture
def runs():
    return preset_run


@pytest.fixture
def criterion():
    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
