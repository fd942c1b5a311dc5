"""
Chowlab settings

All tunables come from the environment (or a local .env file). Values are
read on every call so a test or a long-running service can change them
without re-importing anything.

Environment variables:
    CHOWLAB_CAP:        largest n for exact enumeration (default 20)
    CHOWLAB_LP_CAP:     largest n for the exact LP oracle (default 10)
    CHOWLAB_BATCH_SIZE: points per sampling batch (default 65536)
    CHOWLAB_WORKERS:    thread workers for sampling batches (default 1)
    CHOWLAB_LOG_LEVEL:  logging level for the CLI and service (default INFO)
"""

import os
import logging

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# ============================================================================
# CONFIGURATION
# ============================================================================

DEFAULT_CAP = 20
DEFAULT_LP_CAP = 10
DEFAULT_BATCH_SIZE = 65_536
DEFAULT_WORKERS = 1
DEFAULT_LOG_LEVEL = "INFO"


def _positive_int_from_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        from func_core import ParameterError
        raise ParameterError(f"{name} must be an integer, got {raw!r}")
    if value < 1:
        from func_core import ParameterError
        raise ParameterError(f"{name} must be >= 1, got {value}")
    return value


def enumeration_cap() -> int:
    return _positive_int_from_env("CHOWLAB_CAP", DEFAULT_CAP)


def lp_cap() -> int:
    return _positive_int_from_env("CHOWLAB_LP_CAP", DEFAULT_LP_CAP)


def batch_size() -> int:
    return _positive_int_from_env("CHOWLAB_BATCH_SIZE", DEFAULT_BATCH_SIZE)


def workers() -> int:
    return _positive_int_from_env("CHOWLAB_WORKERS", DEFAULT_WORKERS)


def log_level() -> int:
    name = os.getenv("CHOWLAB_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO


def configure_logging() -> None:
    """Used by the CLI and the service; library modules only get loggers."""
    logging.basicConfig(
        level=log_level(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
