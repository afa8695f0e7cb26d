"""
helpers.py

Collection of small reusable helpers shared by the commands:
logging setup, the worker-pool cap, CLI value parsing, deterministic
JSON/CSV report writers, and text file load/save utilities.
"""

import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from errors import ConfigError
from utils.constants import (
    DEFAULT_MAX_THREADS,
    ENGINE_NAME,
    ENGINE_VERSION,
    LOG_FORMAT,
    REPORT_SCHEMA,
    THREADS_ENV_VAR,
)


# ------------------------------------------------------------
# LOGGING AND RUNTIME
# ------------------------------------------------------------

def configure_logging(verbosity: int = 0) -> None:
    """
    Install a single stderr handler on the root logger.

    Parameters
    ----------
    verbosity : int
        0 -> WARNING, 1 -> INFO, 2 or more -> DEBUG.
    """
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level)


def thread_cap() -> int:
    """
    Worker count for batch parallelism.

    GEOM_THREADS overrides the default min(8, cpu_count).

    Raises
    ------
    ConfigError
        GEOM_THREADS is set but not a positive integer.
    """
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None or raw.strip() == "":
        return max(1, min(DEFAULT_MAX_THREADS, os.cpu_count() or 1))
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}")
    return value


# ------------------------------------------------------------
# PARSE HELPERS
# ------------------------------------------------------------

def parse_float_list(text: str) -> list[float]:
    """
    Parse "a,b,c" into floats.

    Example:
        "1.0,0.5" -> [1.0, 0.5]
    """
    items = [item.strip() for item in str(text).split(",")]
    if not items or any(item == "" for item in items):
        raise ConfigError(f"expected comma-separated numbers, got {text!r}")
    try:
        values = [float(item) for item in items]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None
    if not all(math.isfinite(v) for v in values):
        raise ConfigError(f"non-finite value in {text!r}")
    return values


def parse_name_list(text: str) -> list[str]:
    """Split "vector,spin:1/2" into non-empty names."""
    names = [item.strip() for item in str(text).split(",") if item.strip()]
    if not names:
        raise ConfigError(f"expected a comma-separated list, got {text!r}")
    return names


# ------------------------------------------------------------
# REPORT BUILDING
# ------------------------------------------------------------

def invariant_entry(name: str, residual: float, tol: float) -> dict:
    """One invariant-check line; a non-finite residual never passes."""
    residual = float(residual)
    return {"name": name, "residual": residual, "tol": float(tol), "pass": bool(math.isfinite(residual) and residual <= tol)}


def build_report(command: dict, results, invariants: list[dict], wall_time: float | None = None) -> dict:
    """
    Assemble the versioned report structure.

    wall_time is included only when given so that untimed runs are
    byte-identical.
    """
    report = {
        "schema": REPORT_SCHEMA,
        "command": command,
        "version": f"{ENGINE_NAME} {ENGINE_VERSION}",
        "results": results,
        "invariants": invariants,
    }
    if wall_time is not None:
        report["wall_time"] = float(wall_time)
    return report


def report_passed(report: dict) -> bool:
    return all(entry["pass"] for entry in report["invariants"])


# ------------------------------------------------------------
# DETERMINISTIC WRITERS
# ------------------------------------------------------------

def format_float(value: float) -> str:
    """17 significant digits; non-finite values become JSON strings."""
    value = float(value)
    if math.isnan(value):
        return '"nan"'
    if math.isinf(value):
        return '"inf"' if value > 0 else '"-inf"'
    return format(value, ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_report(report: dict, indent: int = 2) -> str:
    """Sorted keys, fixed float format, trailing newline."""
    return _encode(report, indent, 0) + "\n"


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    """
    Long-form CSV table with a header row.

    Parameters
    ----------
    rows : list[dict]
        One dictionary per row.
    columns : list[str]
        Column order.
    """
    frame = pd.DataFrame(rows, columns=columns)
    return frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")


# ------------------------------------------------------------
# FILE UTILITIES
# ------------------------------------------------------------

def load_text(path: str) -> str:
    """
    Read a UTF-8 text file.

    Raises
    ------
    ConfigError
        The file does not exist or cannot be read.
    """
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None


def save_text(path: str, data: str) -> None:
    """
    Write text in one call, creating parent folders.

    Raises
    ------
    ConfigError
        The target or one of its folders cannot be created or written.
    """
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="\n") as f:
            f.write(data)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror or exc}") from None
