"""
Input/Output utilities (JSON artifacts, CSV tables, output skipping).
"""

import json
import logging
import math
from pathlib import Path

import polars as pl


logger = logging.getLogger(__name__)


def should_process_output(path: Path, replace: bool) -> bool:
    """Return True when the target path should be generated.

    Parameters
    ----------
    path : Path
        Target output file path
    replace : bool
        Whether to replace existing files

    Returns
    -------
    bool
        True if file should be processed
    """
    return replace or not path.exists()


def _clean(value: object) -> object:
    # JSON has no NaN/inf
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def write_json(payload: dict, path: Path | str) -> Path:
    """Write ``payload`` with sorted keys so identical runs give identical bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False) + "\n")
    logger.debug("Wrote %s", path)
    return path


def read_json(path: Path | str) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    return json.loads(path.read_text())


def write_rows_csv(rows: list[dict], path: Path | str, columns: list[str] | None = None) -> Path:
    """Write a list of records as CSV (columns in first-record order unless given)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if columns is None:
        columns = list(rows[0]) if rows else []
    frame = pl.DataFrame(
        {c: [row.get(c) for row in rows] for c in columns},
        strict=False,
    )
    frame.write_csv(path)
    logger.debug("Wrote %s (%s rows)", path, frame.height)
    return path


def safe_name(token: str) -> str:
    """File-name form of a method or ratio token (``static:60`` -> ``static-60``)."""
    return token.replace(":", "-").replace(".", "_")


__all__ = [
    "should_process_output",
    "write_json",
    "read_json",
    "write_rows_csv",
    "safe_name",
]
