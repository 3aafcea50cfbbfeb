"""
Rendering of command results on stdout
"""
from typing import Any, Iterable, List, Sequence, TextIO, Tuple

import pandas as pd

from src.core.config import settings


def format_value(value: Any) -> str:
    """Floats with the configured significant digits, lists comma separated"""
    if isinstance(value, float):
        return settings.float_format % value
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    if value is None:
        return "none"
    return str(value)


def emit_lines(pairs: Iterable[Tuple[str, Any]], out: TextIO) -> None:
    """One `key=value` line per pair"""
    for key, value in pairs:
        out.write(f"{key}={format_value(value)}\n")


def emit_table(rows: Sequence[dict], columns: List[str], fmt: str, out: TextIO) -> None:
    """
    Tabular output

    `csv` writes a header row followed by the rows; `lines` writes each
    row as space separated `key=value` fields.
    """
    if fmt == "csv":
        frame = pd.DataFrame(list(rows), columns=columns)
        frame.to_csv(out, index=False, float_format=settings.float_format, lineterminator="\n")
        return
    for row in rows:
        out.write(" ".join(f"{key}={format_value(row[key])}" for key in columns) + "\n")
