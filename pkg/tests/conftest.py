import pytest

from quaddock.core import apply_overrides, load_config

QUIET = {"scenario.platform_speed": 0.0, "scenario.speed_jitter": 0.0, "scenario.wind_max": 0.0,
         "scenario.gust_max": 0.0, "noise.enabled": False}


@pytest.fixture
def cfg():
    return load_config(None)


@pytest.fixture
def quiet_cfg():
    """Static platform, still air, noise-free sensing."""
    return apply_overrides(load_config(None), QUIET).validate()

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def emit(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
