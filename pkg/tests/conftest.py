import json
from pathlib import Path

import pytest

from peo.backbones import get_backbone

REPO_ROOT = Path(__file__).resolve().parents[1]
GOLDEN_DIR = REPO_ROOT / "tests" / "golden"
PROMPTS20 = REPO_ROOT / "tests" / "fixtures" / "prompts20.txt"


@pytest.fixture(scope="session")
def toy():
    return get_backbone("toy")


@pytest.fixture(scope="session")
def toy2():
    return get_backbone("toy2")


@pytest.fixture(scope="session")
def golden():
    cache = {}

    def load(name: str) -> dict:
        if name not in cache:
            cache[name] = json.loads((GOLDEN_DIR / f"{name}.json").read_text())
        return cache[name]

    return load


@pytest.fixture()
def repo_cwd(monkeypatch):
    """Commands that embed relative paths in their bundles run from the repo root."""
    monkeypatch.chdir(REPO_ROOT)
    return REPO_ROOT


def pytest_terminal_summary(terminalreporter):
    try:
        from tests.test_acceptance import ACCEPTANCE_RESULTS
    except ImportError:
        return
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
