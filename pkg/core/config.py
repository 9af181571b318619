"""
Core configuration.

Process settings come from environment variables (examples):
- APP_NAME / APP_VERSION
- LOG_LEVEL / LOG_JSON
- DOGAN_OUTPUT_ROOT (root directory for run directories)
- TORCH_NUM_THREADS
- CORS_ORIGINS (comma separated, "*" allowed)

Experiment settings come from a flat `key = value` file (see
`load_experiment_config`) validated by `core.experiment_config.ExperimentConfig`.
"""
from __future__ import annotations

import os
from pathlib import Path
from typing import Any, List, Mapping, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import ValidationError

from core.exceptions import ConfigError
from core.experiment_config import ExperimentConfig

# Auto-load .env if present
load_dotenv(dotenv_path=".env", override=False)


class Settings:
    """Process-level settings loader."""

    def __init__(self) -> None:
        # App
        self.APP_NAME: str = os.getenv("APP_NAME", "DoGAN-Lab")
        self.APP_VERSION: str = os.getenv("APP_VERSION", "0.1.0")

        # Logging
        self.LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
        self.LOG_JSON: bool = os.getenv("LOG_JSON", "false").lower() in {"1", "true", "yes", "on"}

        # Runs
        self.DOGAN_OUTPUT_ROOT: Path = Path(os.getenv("DOGAN_OUTPUT_ROOT", "runs"))
        self.TORCH_NUM_THREADS: Optional[int] = self._optional_int(os.getenv("TORCH_NUM_THREADS"))

        # CORS (serve command)
        cors_origins_env = os.getenv("CORS_ORIGINS", "*")
        self.CORS_ORIGINS: List[str] = (
            ["*"]
            if cors_origins_env.strip() == "*"
            else [origin.strip() for origin in cors_origins_env.split(",") if origin.strip()]
        )

    @staticmethod
    def _optional_int(raw: Optional[str]) -> Optional[int]:
        if raw is None or not raw.strip():
            return None
        return int(raw)

    def output_root(self) -> Path:
        """Output root, re-read from the environment so tests can redirect it."""

        return Path(os.getenv("DOGAN_OUTPUT_ROOT", str(self.DOGAN_OUTPUT_ROOT)))


settings = Settings()


def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse a flat `key = value` file; `#` starts a comment."""

    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"Config file not found: {config_path}")
    values = dotenv_values(config_path)
    missing = [key for key, value in values.items() if value is None]
    if missing:
        raise ConfigError("Config keys without a value.", detail=", ".join(missing))
    return {key.strip().lower(): value for key, value in values.items()}


def load_experiment_config(
    path: Optional[str | Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ExperimentConfig:
    """
    Build an `ExperimentConfig` from an optional config file plus overrides.

    Overrides (CLI flags) take precedence over file values; `None` overrides
    are ignored so unset flags fall through to the file or the defaults.
    """
    merged: dict[str, Any] = {}
    if path is not None:
        merged.update(read_config_file(path))
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value

    try:
        return ExperimentConfig.model_validate(merged)
    except ValidationError as exc:
        raise ConfigError("Invalid experiment configuration.", detail=str(exc)) from exc
