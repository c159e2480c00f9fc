"""Runtime settings from the environment, and scenario loading from TOML/JSON files."""

from __future__ import annotations

import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Literal

from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from .schemas import ScenarioConfig

# Resolve .env from project root (parent of energy_tuner) so it loads regardless of cwd
_PROJECT_ROOT = Path(__file__).resolve().parent.parent
_ENV_FILE = _PROJECT_ROOT / ".env"


class ScenarioError(Exception):
    """Raised when a scenario file is missing, unparsable or fails validation."""

    def __init__(self, message: str, kind: str = "configuration") -> None:
        self.message = message
        self.kind = kind
        super().__init__(message)


class Settings(BaseSettings):
    """Settings loaded from environment variables (or .env in the project root)."""

    model_config = SettingsConfigDict(
        env_file=_ENV_FILE,
        env_file_encoding="utf-8",
        extra="ignore",
    )

    LOG_FORMAT: Literal["text", "json"] = "text"
    LOG_LEVEL: str = "INFO"
    # Append-only campaign trace; empty string disables auditing.
    AUDIT_LOG_PATH: str = str(_PROJECT_ROOT / "AUDIT.jsonl")
    # Belief checkpoints are written per round when set.
    CHECKPOINT_DIR: str = ""
    OUTPUT_DIR: str = "runs"
    SCENARIO_FILE: str = str(_PROJECT_ROOT / "scenarios" / "reference.toml")


def get_settings() -> Settings:
    """Return application settings (env-based)."""
    return Settings()


def get_env_file_path() -> Path:
    """Return path to .env file used for loading (for logging)."""
    return _ENV_FILE


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read a scenario file (.toml, or .json) into a validated ScenarioConfig.

    Raises:
        ScenarioError: file missing, syntax error, or validation failure.
    """
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(f"Cannot read scenario file {p}: {e}") from e
    try:
        data = json.loads(text) if p.suffix == ".json" else tomllib.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ScenarioError(f"Scenario file {p} is not valid {p.suffix.lstrip('.') or 'toml'}: {e}") from e
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first.get("loc", ()))
        raise ScenarioError(f"Invalid scenario {p}: {where}: {first.get('msg', 'validation error')}") from e
