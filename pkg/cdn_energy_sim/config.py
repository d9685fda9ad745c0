import os
from dataclasses import dataclass
from typing import Dict, Optional

from dotenv import load_dotenv

from .errors import ConfigurationError

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
LOG_FORMATS = ("text", "json")


@dataclass(frozen=True)
class Settings:
    """Runtime settings that are not part of a scenario."""

    log_level: str = "INFO"
    log_format: str = "text"
    jobs: int = 1
    top_k: int = 10

    @property
    def debug(self) -> bool:
        return self.log_level == "DEBUG"


def validate_config(config: Dict[str, str]) -> None:
    """
    Validate a raw settings dictionary.

    Args:
        config: Settings dictionary to validate

    Raises:
        ConfigurationError: If a setting is invalid
    """
    invalid = []

    if config.get("log_level", "INFO") not in LOG_LEVELS:
        invalid.append("log_level")
    if config.get("log_format", "text") not in LOG_FORMATS:
        invalid.append("log_format")
    for key in ("jobs", "top_k"):
        value = str(config.get(key, "1")).strip()
        if not value.isdigit() or int(value) < 1:
            invalid.append(key)

    if invalid:
        raise ConfigurationError(
            f"Invalid runtime settings: {', '.join(invalid)}", invalid_keys=invalid
        )


def load_settings(env_file: Optional[str] = None) -> Settings:
    """
    Load runtime settings from the environment, optionally seeded by a file.

    Args:
        env_file: Optional path to a ``.env`` file

    Returns:
        Validated settings

    Raises:
        ConfigurationError: If a setting is invalid
    """
    load_dotenv(env_file)

    config = {
        "log_level": os.getenv("CDN_ENERGY_LOG_LEVEL", "INFO").strip().upper(),
        "log_format": os.getenv("CDN_ENERGY_LOG_FORMAT", "text").strip().lower(),
        "jobs": os.getenv("CDN_ENERGY_JOBS", str(os.cpu_count() or 1)).strip(),
        "top_k": os.getenv("CDN_ENERGY_TOP_K", "10").strip(),
    }

    validate_config(config)
    return Settings(
        log_level=config["log_level"],
        log_format=config["log_format"],
        jobs=int(config["jobs"]),
        top_k=int(config["top_k"]),
    )
