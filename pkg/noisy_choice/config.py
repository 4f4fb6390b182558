"""
Configuration, limits and the check registry for noisy_choice.

This module resolves runtime settings from the environment, enforces the
exhaustive-enumeration caps, provides the check registry used by the
verification suite, and loads YAML suite files into VerificationSuite
instances.
"""

import logging
import os
from dataclasses import dataclass
from typing import Any, Optional

import yaml

from noisy_choice.suite import Check, VerificationSuite

logger = logging.getLogger(__name__)

DEFAULT_MAX_N = 24
DEFAULT_AUDIT_MAX_N = 16
DEFAULT_SEED = 1729
DEFAULT_BOUND_CONSTANT = 1.0
DEFAULT_MEMO_RETAIN = 2_000_000

# Cap name -> environment variable that overrides it
CAP_ENV_VARS = {
    "exhaustive": "NOISY_CHOICE_MAX_N",
    "audit": "NOISY_CHOICE_AUDIT_MAX_N",
}

# Global registry mapping check names to Check classes
CHECK_REGISTRY: dict[str, type[Check]] = {}


class CapExceededError(ValueError):
    """Raised when a requested size exceeds a configured enumeration cap."""

    def __init__(self, cap_name: str, limit: int, requested: int):
        self.cap_name = cap_name
        self.limit = limit
        self.requested = requested
        env_var = CAP_ENV_VARS.get(cap_name)
        hint = f" (override with {env_var})" if env_var else ""
        super().__init__(
            f"n={requested} exceeds the {cap_name} cap of {limit}{hint}"
        )


@dataclass(frozen=True)
class Settings:
    """Runtime settings resolved from the environment."""
    max_n: int
    audit_max_n: int
    seed: int
    bound_constant: float
    memo_retain: int


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"Environment variable {name} must be an integer, got {raw!r}")
    if value < 0:
        raise ValueError(f"Environment variable {name} must be nonnegative, got {value}")
    return value


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"Environment variable {name} must be a number, got {raw!r}")


def get_settings() -> Settings:
    """
    Resolve settings from the environment.

    Read on every call so tests and the CLI can override caps through
    environment variables without reloading modules.

    Returns:
        Settings with caps, default seed, bound constant and memo retention
    """
    return Settings(
        max_n=_env_int("NOISY_CHOICE_MAX_N", DEFAULT_MAX_N),
        audit_max_n=_env_int("NOISY_CHOICE_AUDIT_MAX_N", DEFAULT_AUDIT_MAX_N),
        seed=_env_int("NOISY_CHOICE_SEED", DEFAULT_SEED),
        bound_constant=_env_float("NOISY_CHOICE_BOUND_CONSTANT", DEFAULT_BOUND_CONSTANT),
        memo_retain=_env_int("NOISY_CHOICE_MEMO_RETAIN", DEFAULT_MEMO_RETAIN),
    )


def require_within_cap(n: int, cap_name: str = "exhaustive", limit: Optional[int] = None) -> None:
    """
    Raise CapExceededError if n exceeds the named cap.

    Args:
        n: Requested voter count
        cap_name: "exhaustive", "audit" or a fixed-limit name
        limit: Explicit limit for caps that are not environment-configurable

    Raises:
        CapExceededError: If n is above the cap
    """
    if limit is None:
        settings = get_settings()
        limit = settings.audit_max_n if cap_name == "audit" else settings.max_n
    if n > limit:
        raise CapExceededError(cap_name, limit, n)


def register_check(name: str):
    """
    Decorator to register a Check class in the global registry.

    Checks are referenced by name in suite YAML files. Names must be unique;
    registering a duplicate raises ValueError.

    Args:
        name: Unique string identifier for this check

    Returns:
        Decorator function that registers the class

    Raises:
        ValueError: If a check with this name is already registered

    Example:
        @register_check("welfare_scaling")
        class WelfareScalingCheck:
            def run(self, context):
                ...
    """
    def decorator(cls: type[Check]) -> type[Check]:
        if name in CHECK_REGISTRY:
            raise ValueError(
                f"Check '{name}' is already registered. "
                f"Existing class: {CHECK_REGISTRY[name].__name__}, "
                f"New class: {cls.__name__}"
            )
        CHECK_REGISTRY[name] = cls
        cls.check_name = name
        logger.debug(f"Registered check '{name}' -> {cls.__name__}")
        return cls
    return decorator


def load_config(path: str) -> dict[str, Any]:
    """
    Load a YAML configuration file.

    Args:
        path: Filesystem path to the YAML file

    Returns:
        Parsed YAML as a dictionary

    Raises:
        FileNotFoundError: If the file doesn't exist
        yaml.YAMLError: If the file contains invalid YAML
        ValueError: If the top level is not a mapping
    """
    logger.info(f"Loading configuration from {path}")
    with open(path, 'r', encoding='utf-8') as f:
        config = yaml.safe_load(f)
    if not isinstance(config, dict):
        raise ValueError(f"Configuration in {path} must be a mapping at the top level")
    logger.debug("Configuration loaded successfully")
    return config


def default_suite(name: str = "full") -> VerificationSuite:
    """Build a suite containing every registered check in registration order."""
    checks = [cls() for cls in CHECK_REGISTRY.values()]
    return VerificationSuite(checks=checks, name=name)


def build_suite_from_config(config: dict[str, Any]) -> VerificationSuite:
    """
    Build a VerificationSuite from a configuration dictionary.

    The config should have the structure:
        {
            "suite": {
                "name": "suite_name",
                "checks": [
                    {"type": "check_name", "tolerance": 1e-9, ...},
                    ...
                ]
            }
        }

    Args:
        config: Configuration dictionary (typically from load_config)

    Returns:
        VerificationSuite with every check instantiated

    Raises:
        KeyError: If required keys are missing
        ValueError: If a check type is not registered
        TypeError: If a check rejects its constructor parameters
    """
    if "suite" not in config:
        raise KeyError("Configuration must contain a 'suite' key")

    suite_config = config["suite"]
    suite_name = suite_config.get("name", "unnamed_suite")

    if "checks" not in suite_config:
        raise KeyError("Suite configuration must contain a 'checks' list")

    checks_config = suite_config["checks"]

    logger.info(f"Building suite '{suite_name}' with {len(checks_config)} checks")

    checks: list[Check] = []
    for i, check_config in enumerate(checks_config):
        if "type" not in check_config:
            raise KeyError(f"Check {i + 1} is missing required 'type' field")

        check_type = check_config["type"]
        if check_type not in CHECK_REGISTRY:
            available_types = ", ".join(sorted(CHECK_REGISTRY.keys()))
            raise ValueError(
                f"Unknown check type '{check_type}' at position {i + 1}. "
                f"Available types: {available_types or '(none registered)'}"
            )

        check_class = CHECK_REGISTRY[check_type]
        check_params = {k: v for k, v in check_config.items() if k != "type"}

        try:
            checks.append(check_class(**check_params))
            logger.debug(f"Instantiated check {i + 1}: {check_type}")
        except TypeError as e:
            raise TypeError(
                f"Failed to instantiate check '{check_type}' at position {i + 1}: {e}"
            )

    suite = VerificationSuite(checks=checks, name=suite_name)
    logger.info(f"Suite '{suite_name}' built successfully")
    return suite
