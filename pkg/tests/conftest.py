import numpy as np
import pytest

from hypersr import data, fixtures, skills
from hypersr.fitness import build_sample_grid


@pytest.fixture(scope="session")
def treloar_split():
    return data.default_split(data.treloar_datasets())


@pytest.fixture(scope="session")
def iso_skill():
    return skills.builtin_isotropic()


@pytest.fixture(scope="session")
def default_grid(treloar_split, iso_skill):
    return build_sample_grid(treloar_split.train, iso_skill.sampling)


@pytest.fixture(scope="session")
def rational_hybrid():
    return fixtures.rational_hybrid_expr()


@pytest.fixture(scope="session")
def sqrt_eq():
    return fixtures.sqrt_nested_expr()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            if not name.startswith("test_criterion_"):
                continue
            num = int(name.split("_")[2])
            verdict = "PASS" if outcome == "passed" else "FAIL"
            lines[num] = f"ACCEPTANCE {num}: {verdict}"
    if lines:
        terminalreporter.write_line("")
        for num in sorted(lines):
            terminalreporter.write_line(lines[num])
