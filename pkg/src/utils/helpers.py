import hashlib
import json
import logging
import os
import sys
from fractions import Fraction
from typing import Any, Dict

from utils.constants import (
    BRUTEFORCE_BUDGET,
    DEFAULT_WORKERS,
    ENUMERATION_LIMIT,
    FLOAT_SIGNIFICANT_DIGITS,
)


def setup_logging(level=None):
    # stderr: stdout carries the report and must stay byte-identical across runs
    level = level or os.getenv("INDEP_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler(sys.stderr)],
    )
    return logging.getLogger(__name__)


def _read_positive_int(var: str, default: int, errors: list) -> int:
    value = os.getenv(var)
    if value is None or value == "":
        return default
    try:
        parsed = int(value)
    except ValueError:
        errors.append(f"{var}={value!r} is not an integer")
        return default
    if parsed < 1:
        errors.append(f"{var}={value!r} must be >= 1")
    return parsed


def get_config_from_env() -> Dict[str, Any]:
    """
    Reads the optional INDEP_* overrides. Nothing is required; malformed
    values abort, the same way a missing required variable would.
    """
    logger = setup_logging()
    errors = []

    config = {
        "WORKERS": _read_positive_int("INDEP_WORKERS", DEFAULT_WORKERS, errors),
        "ENUMERATION_LIMIT": _read_positive_int(
            "INDEP_ENUMERATION_LIMIT", ENUMERATION_LIMIT, errors
        ),
        "BRUTEFORCE_BUDGET": _read_positive_int(
            "INDEP_BRUTEFORCE_BUDGET", BRUTEFORCE_BUDGET, errors
        ),
        "WIDE_PROFILE": os.getenv("INDEP_WIDE_PROFILE", "0").lower()
        in ("1", "true", "yes"),
    }

    if errors:
        logger.error(f"ABORTING: Invalid environment configuration: {'; '.join(errors)}")
        sys.exit(2)

    logger.debug(f"Configuration loaded: {config}")
    return config


def format_rational(value: Fraction) -> str:
    """Exact rationals travel as "p/q" strings (integers as "p")."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_float(value: float) -> float:
    return float(f"{value:.{FLOAT_SIGNIFICANT_DIGITS}g}")


def canonical_json(data: Any) -> bytes:
    return json.dumps(data, sort_keys=True, separators=(",", ":")).encode("utf-8")


def hash_json(data: Any, algorithm: str = "sha256") -> str:
    """
    Hash of the canonical JSON form of data.
    Returns a string in the format 'algorithm:hex_digest'.
    """
    h = hashlib.new(algorithm)
    h.update(canonical_json(data))
    return f"{algorithm}:{h.hexdigest()}"
