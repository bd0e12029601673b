"""CSV tables shared by the modules and the command line.

Floats are written with 17 significant digits so that every binary64
value round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import os
from typing import IO, Iterable, Sequence


def fmt(value) -> str:
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    return f"{float(value):.17g}"


def write_csv(target: str | os.PathLike | IO[str], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write ``header`` and ``rows`` (ints verbatim, everything else as 17-digit floats)."""
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            write_csv(fh, header, rows)
        return
    w = csv.writer(target, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])


def to_csv_string(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    write_csv(buf, header, rows)
    return buf.getvalue()


def read_csv(source: str | os.PathLike | IO[str]) -> tuple[list[str], list[list[str]]]:
    """Header and raw string rows."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_csv(fh)
    reader = csv.reader(source)
    rows = [r for r in reader if r]
    if not rows:
        raise ValueError("empty CSV")
    return rows[0], rows[1:]
