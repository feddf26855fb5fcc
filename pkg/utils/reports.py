"""
CSV report writing.

Every report is written in one piece (no appends) with a fixed column
order taken from the row model's ``CSV_COLUMNS``.  Floats are written with
9 significant digits so two identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import logging
from pathlib import Path
from typing import Any, Iterable, List, Sequence, Union

from pydantic import BaseModel

logger = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def render_csv(columns: Sequence[str], rows: Iterable[Union[BaseModel, dict, Sequence]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if isinstance(row, BaseModel):
            row = row.model_dump()
        if isinstance(row, dict):
            values: List[Any] = [row[col] for col in columns]
        else:
            values = list(row)
        writer.writerow([format_value(v) for v in values])
    return buffer.getvalue()


def write_csv(
    path: Union[str, Path],
    columns: Sequence[str],
    rows: Iterable[Union[BaseModel, dict, Sequence]],
) -> Path:
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    text = render_csv(columns, rows)
    path.write_text(text, encoding="utf-8")
    logger.info("Report written to %s (%d row(s))", path, text.count("\n") - 1)
    return path
