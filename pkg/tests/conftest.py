"""Shared pytest fixtures for energy_tuner tests."""

import sys
from pathlib import Path

# Ensure project root is on path so "energy_tuner" package is found
_root = Path(__file__).resolve().parent.parent
if str(_root) not in sys.path:
    sys.path.insert(0, str(_root))

import pytest
from dotenv import load_dotenv
from fastapi.testclient import TestClient

from energy_tuner.main import app

# Load .env from project root so LOG_FORMAT and friends reach os.environ for tests
load_dotenv(_root / ".env")

SCENARIOS = _root / "scenarios"


@pytest.fixture
def client() -> TestClient:
    """FastAPI TestClient for hitting endpoints without starting a server."""
    return TestClient(app)


@pytest.fixture(autouse=True)
def _isolated_outputs(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep audit entries, checkpoints and run outputs out of the project tree."""
    monkeypatch.setenv("AUDIT_LOG_PATH", str(tmp_path / "AUDIT.jsonl"))
    monkeypatch.setenv("CHECKPOINT_DIR", "")
    monkeypatch.setenv("OUTPUT_DIR", str(tmp_path / "runs"))


@pytest.fixture
def scenarios_dir() -> Path:
    return SCENARIOS
