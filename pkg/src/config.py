# Configuration file parsing module

import json
import logging
import os
from typing import Any, Dict

try:
    from src.utils import ConfigError
except ImportError:  # Fallback for when the package is installed
    from utils import ConfigError

VERSION = "0.1.0"
DEFAULT_CONFIG_PATH = "aoi_lab.json"
DEFAULT_SEED = 20250101
VALID_LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
VALID_FORMATS = ["csv", "pretty"]

logger = logging.getLogger(__name__)


def _env_int(name: str, fallback: int) -> int:
    raw = os.getenv(name)
    if raw is None:
        return fallback
    try:
        return int(raw)
    except (ValueError, TypeError):
        logger.warning(f"Ignoring {name}={raw!r}: not an integer, keeping {fallback}")
        return fallback


def load_config(path: str = DEFAULT_CONFIG_PATH) -> Dict[str, Any]:
    """
    Loads configuration from a JSON file and environment variables.
    Environment variables override JSON settings.
    """
    config: Dict[str, Any] = {}
    if path and os.path.exists(path):
        with open(path, 'r') as f:
            try:
                config = json.load(f)
                if config is None:  # Handle empty JSON file
                    config = {}
                logger.info(f"Configuration loaded from {path}")
            except json.JSONDecodeError as e:
                logger.error(f"Error parsing JSON file {path}: {e}")
                raise ConfigError(f"Error parsing JSON file {path}: {e}")
    else:
        logger.warning(f"Config file {path} not found. Using defaults and environment variables.")

    if not isinstance(config, dict):
        raise ConfigError(f"Config file {path} must contain a JSON object")

    config.setdefault("run", {})
    config.setdefault("scenario", {})

    run = config["run"]
    run["seed"] = _env_int("AOI_LAB_SEED", run.get("seed", DEFAULT_SEED))
    run["workers"] = _env_int("AOI_LAB_WORKERS", run.get("workers", 1))
    run["log_level"] = str(os.getenv("AOI_LAB_LOG_LEVEL", run.get("log_level", "INFO"))).upper()
    run["format"] = str(run.get("format", "pretty")).lower()

    validate_config(config)
    return config


def validate_config(config: Dict[str, Any]) -> None:
    """
    Validates the run section and, when present, the scenario section.
    """
    if "run" not in config:
        raise ConfigError("Missing required configuration section: run")
    run = config["run"]

    seed = run.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("run.seed must be an integer in [0, 2**64).")

    workers = run.get("workers")
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError("run.workers must be a positive integer.")

    if run.get("log_level") not in VALID_LOG_LEVELS:
        raise ConfigError(f"run.log_level must be one of {VALID_LOG_LEVELS}.")

    if run.get("format") not in VALID_FORMATS:
        raise ConfigError(f"run.format must be one of {VALID_FORMATS}.")

    scenario = config.get("scenario") or {}
    if scenario:
        if "system" not in scenario:
            raise ConfigError("scenario.system is required when a scenario section is given.")
        if not isinstance(scenario.get("parameters", {}), dict):
            raise ConfigError("scenario.parameters must be a mapping of rate names to values.")

    logger.debug("Configuration validated successfully.")
