"""CSV and JSON-lines writers for run outputs."""

import csv
import json
import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from ..exceptions import EvaluationError

logger = logging.getLogger(__name__)


def write_csv(path: Path, rows: Sequence[BaseModel], fieldnames: list[str] | None = None) -> Path:
    """Write pydantic rows as CSV with a header (columns in field order).

    Raises:
        EvaluationError: If the file cannot be written.
    """
    if fieldnames is None:
        if not rows:
            raise EvaluationError(f"No rows to write to {path}")
        fieldnames = list(type(rows[0]).model_fields)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow(row.model_dump(mode="json"))
    except OSError as e:
        raise EvaluationError(f"Failed to write {path}: {e!s}") from e
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def read_csv(path: Path) -> list[dict[str, str]]:
    try:
        with open(path, newline="", encoding="utf-8") as f:
            return list(csv.DictReader(f))
    except OSError as e:
        raise EvaluationError(f"Failed to read {path}: {e!s}") from e


def write_jsonl(path: Path, rows: Sequence[BaseModel]) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [json.dumps(r.model_dump(mode="json"), sort_keys=True) for r in rows]
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    except OSError as e:
        raise EvaluationError(f"Failed to write {path}: {e!s}") from e
    return path


def read_jsonl(path: Path) -> list[dict[str, Any]]:
    """Parse a JSON-lines file into dicts, skipping blank lines."""
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise EvaluationError(f"File not found: {path}") from None
    except OSError as e:
        raise EvaluationError(f"Failed to read {path}: {e!s}") from e
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as e:
            raise EvaluationError(f"Malformed JSON at {path}:{lineno}: {e!s}") from e
    return rows
