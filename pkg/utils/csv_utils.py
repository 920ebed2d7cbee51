"""
utils/csv_utils.py
------------------
CSV writing for traces, curves and comparison tables.

Features:
- Fixed column order taken from the caller (never inferred from dict ordering)
- Booleans written as 0/1 integers
- Floats rendered with Settings.CSV_DIGITS significant digits
- Byte-stable output ("\\n" line endings, no index column)
"""

from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import pandas as pd

from utils.config import settings


def rows_to_frame(rows: Iterable[Mapping[str, Any]], columns: Sequence[str]) -> pd.DataFrame:
    """Build a DataFrame with exactly `columns`, in that order."""
    frame = pd.DataFrame.from_records(list(rows), columns=list(columns))
    for name in frame.columns:
        if frame[name].dtype == bool:
            frame[name] = frame[name].astype(int)
    return frame


def write_csv(
    path: str | Path,
    rows: Iterable[Mapping[str, Any]],
    columns: Sequence[str],
    digits: int | None = None,
) -> int:
    """
    Write rows to `path` and return the number of data rows written.

    Args:
        path: Destination file; parent directories are created.
        rows: Mappings keyed by column name.
        columns: Column order of the header row.
        digits: Significant digits for floats (defaults to Settings.CSV_DIGITS).
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame = rows_to_frame(rows, columns)
    frame.to_csv(
        target,
        index=False,
        float_format=f"%.{digits or settings.CSV_DIGITS}g",
        lineterminator="\n",
    )
    return len(frame)
