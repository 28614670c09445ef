import numpy as np
import pytest


def pytest_addoption(parser):
    parser.addoption(
        "--skip-slow", action="store_true", default=False,
        help="skip the long Monte Carlo tests (acceptance criteria 6-13)")


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: long Monte Carlo runs (minutes)")


def pytest_collection_modifyitems(config, items):
    if not config.getoption("--skip-slow"):
        return
    marker = pytest.mark.skip(reason="--skip-slow given")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(marker)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    lines = {}
    for outcome in ("passed", "failed", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            name = getattr(report, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in name:
                continue
            label = name.split("::test_criterion_")[1]
            num, _, rest = label.partition("_")
            lines[int(num)] = (outcome.upper().replace("PASSED", "PASS"),
                               rest.replace("_", " "))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(lines):
        outcome, rest = lines[num]
        tag = {"PASSED": "PASS", "FAILED": "FAIL",
               "SKIPPED": "SKIPPED"}.get(outcome, outcome)
        terminalreporter.write_line(f"criterion {num:2d}: {tag} - {rest}")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240815)
